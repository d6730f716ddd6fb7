//! Minimal limited-memory BFGS with Armijo backtracking.
//!
//! Two-loop recursion over a bounded history of (step, gradient-change)
//! pairs, initial Hessian scaling s'y / y'y, curvature pairs with
//! non-positive s'y are skipped. Only what the embedding fit needs; not a
//! general-purpose solver.

use std::collections::VecDeque;

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
const CURVATURE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) struct LbfgsParams {
    pub memory: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
}

#[derive(Debug)]
#[allow(dead_code)] // diagnostics fields; read by tests and kept for debugging
pub(crate) struct LbfgsOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective or gradient left the finite range and shrinking the step
    /// did not recover; the caller decides whether to restart.
    pub non_finite: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Minimises `f`, which evaluates the objective at a point and writes the
/// gradient into its second argument.
pub(crate) fn minimize<F>(mut f: F, x0: Vec<f64>, params: &LbfgsParams) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let dim = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; dim];
    let mut value = f(&x, &mut grad);
    let initial_value = value;

    let bail = |x: Vec<f64>, value: f64, grad: &[f64], it: usize, nf: bool| LbfgsOutcome {
        grad_inf_norm: inf_norm(grad),
        point: x,
        value,
        initial_value,
        iterations: it,
        converged: false,
        non_finite: nf,
    };

    if !value.is_finite() || !all_finite(&grad) {
        return bail(x, value, &grad, 0, true);
    }

    // History of (s, y, 1 / s'y), newest at the back.
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut direction = vec![0.0; dim];
    let mut x_next = vec![0.0; dim];
    let mut grad_next = vec![0.0; dim];

    for iter in 0..params.max_iter {
        let g_inf = inf_norm(&grad);
        if g_inf <= params.grad_tol {
            return LbfgsOutcome {
                point: x,
                value,
                initial_value,
                grad_inf_norm: g_inf,
                iterations: iter,
                converged: true,
                non_finite: false,
            };
        }

        // Two-loop recursion: direction = -H grad.
        direction.copy_from_slice(&grad);
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let alpha = rho * dot(s, &direction);
            for (d, yi) in direction.iter_mut().zip(y) {
                *d -= alpha * yi;
            }
            alphas.push(alpha);
        }
        if let Some((s, y, _)) = history.back() {
            let scale = dot(s, y) / dot(y, y);
            direction.iter_mut().for_each(|d| *d *= scale);
        }
        for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &direction);
            for (d, si) in direction.iter_mut().zip(s) {
                *d += (alpha - beta) * si;
            }
        }
        direction.iter_mut().for_each(|d| *d = -*d);

        let mut dir_deriv = dot(&grad, &direction);
        if dir_deriv >= 0.0 {
            // Stale curvature produced an ascent direction; forget it.
            history.clear();
            for (d, g) in direction.iter_mut().zip(&grad) {
                *d = -g;
            }
            dir_deriv = -dot(&grad, &grad);
        }

        let mut step = if history.is_empty() {
            1.0 / g_inf.max(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        let mut value_next = value;
        let mut saw_non_finite = false;
        for _ in 0..MAX_BACKTRACKS {
            for ((xn, xi), d) in x_next.iter_mut().zip(&x).zip(&direction) {
                *xn = xi + step * d;
            }
            value_next = f(&x_next, &mut grad_next);
            if !value_next.is_finite() || !all_finite(&grad_next) {
                saw_non_finite = true;
                step *= BACKTRACK;
                continue;
            }
            if value_next <= value + ARMIJO_C1 * step * dir_deriv {
                accepted = true;
                break;
            }
            step *= BACKTRACK;
        }
        if !accepted {
            // A full backtrack that still saw non-finite values is a genuine
            // blow-up; pure sufficient-decrease failure means we are at
            // numerical resolution, return the best point found.
            return bail(x, value, &grad, iter, saw_non_finite);
        }

        let s: Vec<f64> = x_next.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad_next.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let s_norm = dot(&s, &s).sqrt();
        let y_norm = dot(&y, &y).sqrt();
        if sy > CURVATURE_FLOOR * s_norm * y_norm {
            if history.len() == params.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        x.copy_from_slice(&x_next);
        grad.copy_from_slice(&grad_next);
        value = value_next;
    }

    let g_inf = inf_norm(&grad);
    LbfgsOutcome {
        point: x,
        value,
        initial_value,
        grad_inf_norm: g_inf,
        iterations: params.max_iter,
        converged: g_inf <= params.grad_tol,
        non_finite: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LbfgsParams {
        LbfgsParams {
            memory: 10,
            grad_tol: 1e-9,
            max_iter: 500,
        }
    }

    #[test]
    fn solves_weighted_quadratic() {
        let target = [3.0, -1.0, 0.5, 7.0];
        let weights = [1.0, 10.0, 0.1, 4.0];
        let out = minimize(
            |x, g| {
                let mut v = 0.0;
                for i in 0..4 {
                    let d = x[i] - target[i];
                    v += 0.5 * weights[i] * d * d;
                    g[i] = weights[i] * d;
                }
                v
            },
            vec![0.0; 4],
            &params(),
        );
        assert!(out.converged, "grad norm {}", out.grad_inf_norm);
        for i in 0..4 {
            assert!((out.point[i] - target[i]).abs() <= 1e-7);
        }
        assert!(out.value <= out.initial_value);
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            vec![-1.2, 1.0],
            &params(),
        );
        assert!(out.converged, "grad norm {}", out.grad_inf_norm);
        assert!((out.point[0] - 1.0).abs() <= 1e-6);
        assert!((out.point[1] - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn reports_non_finite_objective() {
        let out = minimize(
            |x, g| {
                g[0] = 1.0;
                if x[0] < -1e3 {
                    f64::NAN
                } else {
                    // Unbounded below drives x toward the NaN region.
                    x[0]
                }
            },
            vec![0.0],
            &params(),
        );
        assert!(!out.converged);
    }

    #[test]
    fn non_finite_at_start_flags_immediately() {
        let out = minimize(
            |_, g| {
                g[0] = f64::NAN;
                f64::NAN
            },
            vec![0.0],
            &params(),
        );
        assert!(out.non_finite);
        assert_eq!(out.iterations, 0);
    }
}
