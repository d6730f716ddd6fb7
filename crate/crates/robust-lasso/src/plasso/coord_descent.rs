//! Cyclic coordinate descent for the LASSO.
//!
//! Solves min_γ ½‖y − Xγ‖² + λ‖γ‖₁ for an explicit design X. The homotopy
//! path solver never calls this; it exists as an independent reference
//! implementation (tests compare the two) and as the workhorse behind
//! [`equivalence_check`], which solves the projected problem in both of its
//! algebraically equivalent forms.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

use super::precondition::Preconditioner;

#[derive(Debug, Clone, Copy)]
pub struct CdOptions {
    /// Stop when no coordinate moves by more than this in one sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for CdOptions {
    fn default() -> Self {
        CdOptions {
            tol: 1e-12,
            max_sweeps: 100_000,
        }
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// ½‖y − Xγ‖² + λ‖γ‖₁ for a candidate solution.
pub fn lasso_objective(
    design: ArrayView2<f64>,
    response: ArrayView1<f64>,
    lambda: f64,
    gamma: ArrayView1<f64>,
) -> f64 {
    let resid = &response - &design.dot(&gamma);
    0.5 * resid.dot(&resid) + lambda * gamma.iter().map(|g| g.abs()).sum::<f64>()
}

/// Cyclic coordinate descent from a warm start (zeros if `init` is None).
pub fn lasso_coordinate_descent(
    design: ArrayView2<f64>,
    response: ArrayView1<f64>,
    lambda: f64,
    init: Option<ArrayView1<f64>>,
    opts: CdOptions,
) -> Result<Array1<f64>> {
    let (m, n) = design.dim();
    if response.len() != m {
        return Err(Error::ShapeMismatch {
            what: "response",
            expected: format!("{m}"),
            got: format!("{}", response.len()),
        });
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }

    let col_norms: Vec<f64> = (0..n).map(|j| design.column(j).dot(&design.column(j))).collect();
    let mut gamma = match init {
        Some(g) if g.len() == n => g.to_owned(),
        Some(g) => {
            return Err(Error::ShapeMismatch {
                what: "warm start",
                expected: format!("{n}"),
                got: format!("{}", g.len()),
            })
        }
        None => Array1::zeros(n),
    };
    let mut resid = &response - &design.dot(&gamma);

    for _ in 0..opts.max_sweeps {
        let mut max_move: f64 = 0.0;
        for j in 0..n {
            if col_norms[j] == 0.0 {
                // A zero column cannot improve the fit, only pay penalty.
                if gamma[j] != 0.0 {
                    gamma[j] = 0.0;
                }
                continue;
            }
            let old = gamma[j];
            let z = design.column(j).dot(&resid) + col_norms[j] * old;
            let new = soft_threshold(z, lambda) / col_norms[j];
            if new != old {
                let delta = new - old;
                resid.scaled_add(-delta, &design.column(j));
                gamma[j] = new;
                max_move = max_move.max(delta.abs());
            }
        }
        if max_move <= opts.tol {
            return Ok(gamma);
        }
    }
    Err(Error::Numerical(format!(
        "coordinate descent did not converge in {} sweeps",
        opts.max_sweeps
    )))
}

/// The two explicit forms of the projected LASSO solved at one λ.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// Solution with design I − H and response (I − H)·y.
    pub gamma_projected: Array1<f64>,
    /// Solution with design U2ᵀ and response U2ᵀ·y.
    pub gamma_kernel_basis: Array1<f64>,
    pub max_diff: f64,
}

/// Solves the projected problem both as ½‖(I−H)y − (I−H)γ‖² + λ‖γ‖₁ and as
/// ½‖U2ᵀy − U2ᵀγ‖² + λ‖γ‖₁ and reports the largest coefficient discrepancy.
/// The two share the Gram matrix I − H, so their solutions must agree; this
/// is a correctness check, not a production code path.
pub fn equivalence_check(
    pre: &Preconditioner,
    y: ArrayView1<f64>,
    lambda: f64,
) -> Result<EquivalenceReport> {
    if pre.kernel_dim() == 0 {
        return Err(Error::NoKernelSpace);
    }
    let opts = CdOptions::default();

    let design_proj = pre.kernel_matrix();
    let resp_proj = pre.kernel_apply(y);
    let gamma_projected =
        lasso_coordinate_descent(design_proj.view(), resp_proj.view(), lambda, None, opts)?;

    let design_kb: Array2<f64> = pre.u2().t().to_owned();
    let resp_kb = pre.u2().t().dot(&y);
    let gamma_kernel_basis =
        lasso_coordinate_descent(design_kb.view(), resp_kb.view(), lambda, None, opts)?;

    let max_diff = gamma_projected
        .iter()
        .zip(gamma_kernel_basis.iter())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(EquivalenceReport {
        gamma_projected,
        gamma_kernel_basis,
        max_diff,
    })
}
