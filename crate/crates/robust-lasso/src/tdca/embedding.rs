//! Softmax embedding of diffusion states.
//!
//! Each node k gets a feature vector x_k and a context vector w_k, both in
//! R^d. The embedding reconstructs node k's diffusion state through a
//! softmax over inner products, `shat_kl = exp(w_k' x_l) / sum_l' exp(w_k'
//! x_l')`, and is fitted by minimising the mean KL divergence `(1/n) sum_k
//! KL(s_k || shat_k)` with L-BFGS. All exponentials are max-shifted, so the
//! objective stays finite for any finite vectors.
//!
//! The fitted `x` rows serve as reduced features for outlier detection; the
//! concatenated `[w | x]` rows serve as classifier features.

use ndarray::{s, Array2, ArrayView2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::tdca::lbfgs::{self, LbfgsParams};

/// Knobs for [`fit_embedding`].
#[derive(Debug, Clone)]
pub struct EmbedOptions {
    /// L-BFGS history length.
    pub memory: usize,
    /// Stop when the gradient sup norm falls below this.
    pub grad_tol: f64,
    /// L-BFGS iteration cap.
    pub max_iter: usize,
    /// Std of the Gaussian initialisation of all vector entries.
    pub init_std: f64,
    /// Seed for the initialisation draw.
    pub seed: u64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions {
            memory: 10,
            grad_tol: 1e-6,
            max_iter: 500,
            init_std: 0.1,
            seed: 0,
        }
    }
}

/// Fitted node (`x`) and context (`w`) vectors.
#[derive(Debug, Clone)]
pub struct Embedding {
    x: Array2<f64>,
    w: Array2<f64>,
    initial_kl: f64,
    final_kl: f64,
}

impl Embedding {
    /// Node vectors, one row per instance.
    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    /// Context vectors, one row per instance.
    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn n_nodes(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Mean KL at the seeded initialisation.
    pub fn initial_kl(&self) -> f64 {
        self.initial_kl
    }

    /// Mean KL after optimisation; never above [`Self::initial_kl`].
    pub fn final_kl(&self) -> f64 {
        self.final_kl
    }

    /// Node vectors as the reduced feature matrix (n x d).
    pub fn reduced_features(&self) -> Array2<f64> {
        self.x.clone()
    }

    /// Concatenated `[w | x]` rows (n x 2d); `x` occupies the last d columns.
    pub fn concat_features(&self) -> Array2<f64> {
        let (n, d) = (self.n_nodes(), self.dim());
        let mut out = Array2::zeros((n, 2 * d));
        out.slice_mut(s![.., ..d]).assign(&self.w);
        out.slice_mut(s![.., d..]).assign(&self.x);
        out
    }

    /// CSV export with header `id,x_1..x_d,w_1..w_d`.
    pub fn to_csv_string(&self, ids: &[u64]) -> Result<String> {
        if ids.len() != self.n_nodes() {
            return Err(Error::ShapeMismatch {
                what: "embedding ids",
                expected: self.n_nodes().to_string(),
                got: ids.len().to_string(),
            });
        }
        let d = self.dim();
        let mut header = String::from("id");
        for j in 1..=d {
            header.push_str(&format!(",x_{j}"));
        }
        for j in 1..=d {
            header.push_str(&format!(",w_{j}"));
        }
        let mut out = header;
        out.push('\n');
        for (i, &id) in ids.iter().enumerate() {
            out.push_str(&id.to_string());
            for v in self.x.row(i) {
                out.push_str(&format!(",{v}"));
            }
            for v in self.w.row(i) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        Ok(out)
    }
}

fn check_shapes(x: ArrayView2<f64>, w: ArrayView2<f64>, s_mat: ArrayView2<f64>) -> Result<usize> {
    let n = s_mat.nrows();
    if s_mat.ncols() != n {
        return Err(Error::ShapeMismatch {
            what: "diffusion state matrix",
            expected: format!("{n}x{n}"),
            got: format!("{}x{}", n, s_mat.ncols()),
        });
    }
    if x.dim() != w.dim() || x.nrows() != n {
        return Err(Error::ShapeMismatch {
            what: "embedding matrices",
            expected: format!("{n}xd for both x and w"),
            got: format!("x {:?}, w {:?}", x.dim(), w.dim()),
        });
    }
    Ok(n)
}

/// Softmax reconstruction `shat` of the states from given vectors (n x n).
pub fn reconstructed_states(x: ArrayView2<f64>, w: ArrayView2<f64>) -> Array2<f64> {
    let mut z = w.dot(&x.t());
    for mut row in z.rows_mut() {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - m).exp());
        let total = row.sum();
        row.mapv_inplace(|v| v / total);
    }
    z
}

/// Mean KL divergence between target states and their softmax
/// reconstruction, with exact analytic gradients.
///
/// Returns `(value, grad_x, grad_w)`. The gradient uses the exact row masses
/// `sum_l s_kl` rather than assuming they equal 1, so it matches finite
/// differences even on slightly denormalised states.
pub fn kl_objective_and_gradient(
    x: ArrayView2<f64>,
    w: ArrayView2<f64>,
    s_mat: ArrayView2<f64>,
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    let n = check_shapes(x, w, s_mat)?;
    if let Some(v) = s_mat.iter().find(|v| **v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "diffusion states must be non-negative, found {v}"
        )));
    }

    let z = w.dot(&x.t());
    let mut value = 0.0;
    // d(value)/dz, reusing z's storage shape.
    let mut dz = Array2::zeros((n, n));
    for k in 0..n {
        let z_row = z.row(k);
        let s_row = s_mat.row(k);
        let m = z_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut exp_sum = 0.0;
        for &v in z_row {
            exp_sum += (v - m).exp();
        }
        let lse = m + exp_sum.ln();
        let mass = s_row.sum();
        let mut row_val = mass * lse;
        for l in 0..n {
            let s_kl = s_row[l];
            if s_kl > 0.0 {
                row_val += s_kl * (s_kl.ln() - z_row[l]);
            }
            let shat = (z_row[l] - lse).exp();
            dz[(k, l)] = (mass * shat - s_kl) / n as f64;
        }
        value += row_val;
    }
    value /= n as f64;

    let grad_w = dz.dot(&x);
    let grad_x = dz.t().dot(&w);
    Ok((value, grad_x, grad_w))
}

/// Fits node and context vectors to the given diffusion states.
///
/// Starts from seeded Gaussian vectors and minimises the mean KL with
/// L-BFGS; accepted steps never increase the objective. A non-finite
/// objective triggers one retry from a 10x smaller initialisation before
/// giving up with a numerical error.
pub fn fit_embedding(s_mat: ArrayView2<f64>, d: usize, opts: &EmbedOptions) -> Result<Embedding> {
    let n = s_mat.nrows();
    if s_mat.ncols() != n {
        return Err(Error::ShapeMismatch {
            what: "diffusion state matrix",
            expected: format!("{n}x{n}"),
            got: format!("{}x{}", n, s_mat.ncols()),
        });
    }
    if d == 0 || d >= n {
        return Err(Error::InvalidConfig(format!(
            "embedding dimension must satisfy 1 <= d < n, got d = {d} for n = {n}"
        )));
    }
    for ((row, col), &v) in s_mat.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    if let Some(v) = s_mat.iter().find(|v| **v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "diffusion states must be non-negative, found {v}"
        )));
    }

    let params = LbfgsParams {
        memory: opts.memory.max(1),
        grad_tol: opts.grad_tol,
        max_iter: opts.max_iter,
    };
    let run = |std: f64| {
        // Layout: w rows first, then x rows, both row-major.
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let dist = Normal::new(0.0, std).expect("std is positive");
        let vars: Vec<f64> = (0..2 * n * d).map(|_| dist.sample(&mut rng)).collect();
        lbfgs::minimize(
            |v, g| {
                let w = ArrayView2::from_shape((n, d), &v[..n * d]).unwrap();
                let x = ArrayView2::from_shape((n, d), &v[n * d..]).unwrap();
                match kl_objective_and_gradient(x, w, s_mat) {
                    Ok((val, gx, gw)) => {
                        g[..n * d].copy_from_slice(gw.as_slice().unwrap());
                        g[n * d..].copy_from_slice(gx.as_slice().unwrap());
                        val
                    }
                    Err(_) => f64::NAN,
                }
            },
            vars,
            &params,
        )
    };

    let mut outcome = run(opts.init_std);
    if outcome.non_finite {
        outcome = run(opts.init_std / 10.0);
        if outcome.non_finite {
            return Err(Error::Numerical(
                "embedding objective became non-finite even after restarting \
                 from a smaller initialisation"
                    .into(),
            ));
        }
    }

    let w = Array2::from_shape_vec((n, d), outcome.point[..n * d].to_vec()).unwrap();
    let x = Array2::from_shape_vec((n, d), outcome.point[n * d..].to_vec()).unwrap();
    Ok(Embedding {
        x,
        w,
        initial_kl: outcome.initial_value,
        final_kl: outcome.value,
    })
}
