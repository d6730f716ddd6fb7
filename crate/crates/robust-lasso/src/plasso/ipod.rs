//! Iterative hard-thresholding refinement of an outlier support.
//!
//! Alternates two exact steps: fit the regression on the current outlier
//! estimate (closed form through the SVD factors) and re-estimate the
//! outliers as the k largest absolute residuals, where k is the size of the
//! initial support. The L0 analogue of the path solver; initialized from a
//! path breakpoint in practice.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};

use super::precondition::Preconditioner;

#[derive(Debug, Clone, Copy)]
pub struct IpodOptions {
    pub max_iter: usize,
}

impl Default for IpodOptions {
    fn default() -> Self {
        IpodOptions { max_iter: 100 }
    }
}

#[derive(Debug, Clone)]
pub struct IpodResult {
    /// Final outlier estimate, ascending index order.
    pub support: Vec<usize>,
    /// False when iteration stopped at max_iter without the support
    /// stabilizing; the last support is still returned.
    pub converged: bool,
    pub iterations: usize,
}

/// Sparsity-matched hard-thresholding refinement. Keeps exactly
/// |init_support| instances each round: those with the largest |residual|,
/// ties broken toward the smaller index.
pub fn ipod_refine(
    pre: &Preconditioner,
    y: ArrayView1<f64>,
    init_support: &[usize],
) -> Result<IpodResult> {
    ipod_refine_with(pre, y, init_support, IpodOptions::default())
}

pub fn ipod_refine_with(
    pre: &Preconditioner,
    y: ArrayView1<f64>,
    init_support: &[usize],
    opts: IpodOptions,
) -> Result<IpodResult> {
    let n = pre.n();
    if y.len() != n {
        return Err(Error::ShapeMismatch {
            what: "response",
            expected: format!("{n}"),
            got: format!("{}", y.len()),
        });
    }
    if let Some(&bad) = init_support.iter().find(|&&j| j >= n) {
        return Err(Error::InvalidInput(format!(
            "init support index {bad} out of range for {n} instances"
        )));
    }
    let k = {
        let mut s = init_support.to_vec();
        s.sort_unstable();
        s.dedup();
        s.len()
    };
    if k == 0 {
        return Ok(IpodResult {
            support: vec![],
            converged: true,
            iterations: 0,
        });
    }

    // Warm start: the projected residual restricted to the initial support.
    let kernel_resid = pre.kernel_apply(y);
    let mut support: Vec<usize> = {
        let mut s = init_support.to_vec();
        s.sort_unstable();
        s.dedup();
        s
    };
    let mut gamma = Array1::zeros(n);
    for &j in &support {
        gamma[j] = kernel_resid[j];
    }

    for iter in 1..=opts.max_iter {
        // r = y − Φβ̂ with β̂ fit on y − γ; equals (I−H)y + Hγ.
        let mut r = kernel_resid.clone();
        r += &pre.hat_apply(gamma.view());

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&a, &b| {
            r[b].abs()
                .partial_cmp(&r[a].abs())
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut next: Vec<usize> = order[..k].to_vec();
        next.sort_unstable();

        gamma.fill(0.0);
        for &j in &next {
            gamma[j] = r[j];
        }
        if next == support {
            return Ok(IpodResult {
                support,
                converged: true,
                iterations: iter,
            });
        }
        support = next;
    }
    Ok(IpodResult {
        support,
        converged: false,
        iterations: opts.max_iter,
    })
}
