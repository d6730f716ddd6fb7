//! SVD preconditioning of the label regression design.
//!
//! The design Φ is factored as U·diag(σ)·Vᵀ; the column basis U1 gives the
//! hat projector H = U1·U1ᵀ and the completed kernel basis U2 spans its
//! orthogonal complement. Projecting the augmented regression onto the
//! kernel eliminates the regression coefficients β from the problem, so the
//! per-instance outlier terms γ can be solved for on their own.

use ndarray::{s, Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

use linfa_linalg::svd::{SvdSort, SVD};

/// Default rank cutoff, as a fraction of the largest singular value.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

/// SVD factors of a design matrix plus the completed kernel basis.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    u1: Array2<f64>,
    u2: Array2<f64>,
    singular_values: Array1<f64>,
    v: Array2<f64>,
    rank: usize,
    rank_tolerance: f64,
}

impl Preconditioner {
    /// Number of instances (rows of Φ).
    pub fn n(&self) -> usize {
        self.u1.nrows()
    }

    /// Feature dimension (columns of Φ).
    pub fn p(&self) -> usize {
        self.v.nrows()
    }

    /// Numerical rank of Φ.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Effective observation count n − r left after projecting out the span
    /// of Φ. Zero means the design absorbs everything and no outlier signal
    /// survives the projection.
    pub fn kernel_dim(&self) -> usize {
        self.n() - self.rank
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tolerance
    }

    /// n×r orthonormal basis of the column span of Φ.
    pub fn u1(&self) -> &Array2<f64> {
        &self.u1
    }

    /// n×(n−r) orthonormal basis of the kernel (orthogonal complement).
    pub fn u2(&self) -> &Array2<f64> {
        &self.u2
    }

    /// Nonzero singular values, descending.
    pub fn singular_values(&self) -> &Array1<f64> {
        &self.singular_values
    }

    /// p×r right singular vectors matching `singular_values`.
    pub fn v(&self) -> &Array2<f64> {
        &self.v
    }

    /// H·v without forming H: U1·(U1ᵀ·v). O(n·r).
    pub fn hat_apply(&self, v: ArrayView1<f64>) -> Array1<f64> {
        let coeffs = self.u1.t().dot(&v);
        self.u1.dot(&coeffs)
    }

    /// (I−H)·v, the projection onto the kernel. O(n·r).
    pub fn kernel_apply(&self, v: ArrayView1<f64>) -> Array1<f64> {
        let mut out = v.to_owned();
        out -= &self.hat_apply(v);
        out
    }

    /// Dense n×n hat matrix U1·U1ᵀ. Intended for tests and small n.
    pub fn hat_matrix(&self) -> Array2<f64> {
        self.u1.dot(&self.u1.t())
    }

    /// Dense n×n kernel projector I − H. Intended for tests and small n.
    pub fn kernel_matrix(&self) -> Array2<f64> {
        let mut k = self.hat_matrix();
        k.mapv_inplace(|x| -x);
        for i in 0..k.nrows() {
            k[[i, i]] += 1.0;
        }
        k
    }
}

/// Factors the design matrix. Succeeds even when the kernel is empty
/// (square full-rank Φ); path construction on such a preconditioner is what
/// fails, since there are no effective observations left.
pub fn precondition(phi: &Array2<f64>) -> Result<Preconditioner> {
    precondition_with_tolerance(phi, DEFAULT_RANK_TOLERANCE)
}

pub fn precondition_with_tolerance(phi: &Array2<f64>, rank_tolerance: f64) -> Result<Preconditioner> {
    let (n, p) = phi.dim();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 instances to precondition, got {n}"
        )));
    }
    for (i, row) in phi.outer_iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    if !(rank_tolerance > 0.0) {
        return Err(Error::InvalidConfig("rank tolerance must be positive".into()));
    }

    let (u, sigma, vt) = phi
        .svd(true, true)
        .map_err(|e| Error::Numerical(format!("SVD failed: {e}")))?
        .sort_svd_desc();
    let u = u.expect("requested U");
    let vt = vt.expect("requested Vt");

    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let cut = rank_tolerance * sigma_max;
    let rank = sigma.iter().filter(|&&s| s > cut).count();

    let u1 = u.slice(s![.., ..rank]).to_owned();
    let singular_values = sigma.slice(s![..rank]).to_owned();
    let v = vt.slice(s![..rank, ..]).t().to_owned();
    let u2 = complete_orthonormal_basis(&u1, n);

    debug_assert_eq!(u2.ncols(), n - rank);
    let _ = p;
    Ok(Preconditioner {
        u1,
        u2,
        singular_values,
        v,
        rank,
        rank_tolerance,
    })
}

/// Least-squares regression coefficients for the design behind `pre`, with
/// the outlier terms `gamma` subtracted from the response first:
/// β̂ = V·Σ⁻¹·U1ᵀ·(y − γ). Minimum-norm solution when Φ is rank deficient.
pub fn solve_beta(
    pre: &Preconditioner,
    y: ArrayView1<f64>,
    gamma: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    let n = pre.n();
    if y.len() != n {
        return Err(Error::ShapeMismatch {
            what: "response",
            expected: format!("{n}"),
            got: format!("{}", y.len()),
        });
    }
    if gamma.len() != n {
        return Err(Error::ShapeMismatch {
            what: "gamma",
            expected: format!("{n}"),
            got: format!("{}", gamma.len()),
        });
    }
    let resid = &y - &gamma;
    let mut coeffs = pre.u1.t().dot(&resid);
    for (c, s) in coeffs.iter_mut().zip(pre.singular_values.iter()) {
        *c /= s;
    }
    Ok(pre.v.dot(&coeffs))
}

/// Completes the orthonormal columns of `u1` to a full basis of R^n and
/// returns the new columns, i.e. an orthonormal basis of the orthogonal
/// complement.
///
/// Method: Householder QR of u1 gives u1 = Q·R with Q a product of r
/// reflectors; the trailing n−r columns of Q are the complement. Columns are
/// materialized by applying the stored reflectors to identity columns, so Q
/// itself is never formed.
fn complete_orthonormal_basis(u1: &Array2<f64>, n: usize) -> Array2<f64> {
    let r = u1.ncols();
    let m = n - r;
    if m == 0 {
        return Array2::zeros((n, 0));
    }
    if r == 0 {
        return Array2::eye(n);
    }

    // Householder vectors v_i (length n, zero above row i) and scales tau_i.
    let mut work = u1.clone();
    let mut vs: Vec<Array1<f64>> = Vec::with_capacity(r);
    let mut taus: Vec<f64> = Vec::with_capacity(r);
    for i in 0..r {
        let x = work.slice(s![i.., i]).to_owned();
        let norm = x.dot(&x).sqrt();
        let mut v = Array1::zeros(n);
        let tau;
        if norm == 0.0 {
            tau = 0.0;
        } else {
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            v.slice_mut(s![i..]).assign(&x);
            v[i] -= alpha;
            let vtv = v.dot(&v);
            tau = if vtv == 0.0 { 0.0 } else { 2.0 / vtv };
            // Reflect the remaining columns so later pivots see updated data.
            for j in (i + 1)..r {
                let col = work.slice(s![i.., j]).to_owned();
                let w = tau * v.slice(s![i..]).dot(&col);
                for (t, vv) in v.slice(s![i..]).iter().enumerate() {
                    work[[i + t, j]] -= w * vv;
                }
            }
        }
        vs.push(v);
        taus.push(tau);
    }

    // Column j of Q for j in r..n: apply reflectors in reverse order to e_j.
    let mut u2 = Array2::zeros((n, m));
    for (c, j) in (r..n).enumerate() {
        let mut q = Array1::zeros(n);
        q[j] = 1.0;
        for i in (0..r).rev() {
            if taus[i] == 0.0 {
                continue;
            }
            let w = taus[i] * vs[i].slice(s![i..]).dot(&q.slice(s![i..]));
            for (t, vv) in vs[i].slice(s![i..]).iter().enumerate() {
                q[i + t] -= w * vv;
            }
        }
        u2.column_mut(c).assign(&q);
    }
    u2
}
