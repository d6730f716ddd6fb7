//! Lazy random walks with restart, one stationary state per node.
//!
//! For restart probability `p_r` and transition matrix `P`, the walk from
//! node k iterates `s <- (1 - p_r) s P + p_r e_k` starting at `s = e_k`.
//! The map is a `(1 - p_r)` contraction in L1, so the iteration converges
//! geometrically for any `p_r > 0` and the fixed point is
//! `s_k = p_r e_k (I - (1 - p_r) P)^-1`. [`lazy_random_walk`] runs the
//! iteration sparsely per node; [`stationary_oracle`] evaluates the
//! resolvent densely and exists to certify the iterative rows in tests.

use linfa_linalg::qr::QR;
use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tdca::graph::DiffusionGraph;

/// Standard restart probability.
pub const DEFAULT_RESTART_PROB: f64 = 0.5;
/// Convergence tolerance on the sup-norm step difference.
pub const DEFAULT_WALK_TOL: f64 = 1e-10;
/// Iteration cap; generous since the contraction rate is `1 - p_r`.
pub const DEFAULT_WALK_MAX_ITER: usize = 10_000;

/// Stationary diffusion states, row k = state of the walk restarted at k.
#[derive(Debug, Clone)]
pub struct DiffusionStates {
    s: Array2<f64>,
    restart_prob: f64,
    residual: f64,
    converged: bool,
}

impl DiffusionStates {
    /// Dense n x n state matrix.
    pub fn matrix(&self) -> &Array2<f64> {
        &self.s
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.s
    }

    /// Stationary distribution of the walk restarted at `node`.
    pub fn state(&self, node: usize) -> ArrayView1<'_, f64> {
        self.s.row(node)
    }

    pub fn n_nodes(&self) -> usize {
        self.s.nrows()
    }

    pub fn restart_prob(&self) -> f64 {
        self.restart_prob
    }

    /// Largest fixed-point residual bound across nodes.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// False when some node hit the iteration cap before reaching tolerance;
    /// the states are still returned with [`Self::residual`] recording how
    /// far they were from stationary.
    pub fn converged(&self) -> bool {
        self.converged
    }
}

fn check_restart_prob(restart_prob: f64) -> Result<()> {
    if !(restart_prob > 0.0 && restart_prob <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "restart probability must be in (0, 1], got {restart_prob}"
        )));
    }
    Ok(())
}

/// Iterates every node's restarted walk to its stationary state.
///
/// Nodes are independent and run in parallel. A node that fails to reach
/// `tol` within `max_iter` steps leaves its last iterate in place and clears
/// the [`DiffusionStates::converged`] flag instead of erroring.
pub fn lazy_random_walk(
    g: &DiffusionGraph,
    restart_prob: f64,
    tol: f64,
    max_iter: usize,
) -> Result<DiffusionStates> {
    check_restart_prob(restart_prob)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "walk tolerance must be positive, got {tol}"
        )));
    }
    let n = g.n_nodes();
    let decay = 1.0 - restart_prob;

    let rows: Vec<(Vec<f64>, f64, bool)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut s = vec![0.0; n];
            s[k] = 1.0;
            let mut nxt = vec![0.0; n];
            let mut residual = f64::INFINITY;
            let mut converged = false;
            for _ in 0..max_iter {
                nxt.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..n {
                    let push = decay * s[i];
                    if push != 0.0 {
                        for (&l, &p) in g.neighbors(i).iter().zip(g.transition_probs(i)) {
                            nxt[l] += push * p;
                        }
                    }
                }
                nxt[k] += restart_prob;
                let mut diff = 0.0f64;
                for (a, b) in nxt.iter().zip(&s) {
                    diff = diff.max((a - b).abs());
                }
                std::mem::swap(&mut s, &mut nxt);
                // The returned iterate is one application past the one `diff`
                // was measured against; contraction makes `diff` an upper
                // bound on its true fixed-point residual.
                residual = diff;
                if diff <= tol {
                    converged = true;
                    break;
                }
            }
            (s, residual, converged)
        })
        .collect();

    let mut s = Array2::zeros((n, n));
    let mut residual = 0.0f64;
    let mut converged = true;
    for (k, (row, res, conv)) in rows.into_iter().enumerate() {
        s.row_mut(k).assign(&Array1::from_vec(row));
        residual = residual.max(res);
        converged &= conv;
    }
    Ok(DiffusionStates {
        s,
        restart_prob,
        residual,
        converged,
    })
}

/// Walk with standard restart probability, tolerance and iteration cap.
pub fn diffusion_states(g: &DiffusionGraph) -> Result<DiffusionStates> {
    lazy_random_walk(g, DEFAULT_RESTART_PROB, DEFAULT_WALK_TOL, DEFAULT_WALK_MAX_ITER)
}

/// Exact stationary states through a dense resolvent solve.
///
/// Evaluates `S = p_r (I - (1 - p_r) P)^-1` row by row. Cubic in the node
/// count, so it refuses graphs beyond 500 nodes; meant for certifying the
/// iterative walk on small graphs, not for production use.
pub fn stationary_oracle(g: &DiffusionGraph, restart_prob: f64) -> Result<DiffusionStates> {
    check_restart_prob(restart_prob)?;
    let n = g.n_nodes();
    if n > 500 {
        return Err(Error::InvalidInput(format!(
            "stationary oracle is cubic in node count; refusing n = {n} > 500"
        )));
    }
    let p = g.transition_matrix();
    let a = Array2::<f64>::eye(n) - &(&p * (1.0 - restart_prob));
    let inv = a
        .qr()
        .and_then(|f| f.inverse())
        .map_err(|e| Error::Numerical(format!("resolvent solve failed: {e}")))?;
    let s = inv * restart_prob;

    // Residual of the closed form under the same fixed-point map.
    let iterated = s.dot(&p) * (1.0 - restart_prob) + Array2::<f64>::eye(n) * restart_prob;
    let residual = (&s - &iterated)
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(DiffusionStates {
        s,
        restart_prob,
        residual,
        converged: true,
    })
}
