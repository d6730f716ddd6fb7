//! Homotopy solver for the kernel-projected LASSO path.
//!
//! The projected problem min_γ ½‖U2ᵀ(y − γ)‖² + λ‖γ‖₁ has a piecewise
//! linear solution in λ. Starting from λ_max = ‖(I−H)y‖_∞ (where γ̂ = 0)
//! the solver walks λ downward, tracking the active set A and its sign
//! vector s. On a segment the affine law is γ_A(λ) = K_AA⁻¹(c0_A − λ·s)
//! with K = I − H and c0 = (I−H)y; segments end where an inactive
//! correlation catches the boundary ±λ (entry) or an active coefficient
//! crosses zero (drop). K_AA is kept factored by an updatable Cholesky.
//!
//! Breakpoint convention: each breakpoint records the exact support of γ̂
//! at its λ. A variable whose boundary crossing happens at λ_k carries
//! γ = 0 there, so it first appears in the support of the next breakpoint;
//! λ_k is its activation value.

use ndarray::{Array1, ArrayView1};
use serde::Serialize;

use crate::error::{Error, Result};

use super::precondition::Preconditioner;

/// Multiplicative slack on the inactive KKT bound |c_j| ≤ λ.
pub const KKT_INACTIVE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct PathOptions {
    /// Path terminates at lambda_min_factor · λ_max.
    pub lambda_min_factor: f64,
    /// Cap on simultaneously active instances; never exceeds the kernel
    /// dimension n − r. None means the structural cap alone applies.
    pub max_active: Option<usize>,
    /// Safety budget on emitted breakpoints. None picks 20·n + 64.
    pub max_breakpoints: Option<usize>,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            lambda_min_factor: 1e-6,
            max_active: None,
            max_breakpoints: None,
        }
    }
}

/// One vertex of the piecewise linear path. `active`, `signs` and `gamma`
/// are parallel arrays sorted by instance index.
#[derive(Debug, Clone, Serialize)]
pub struct Breakpoint {
    pub lambda: f64,
    pub active: Vec<usize>,
    pub signs: Vec<f64>,
    #[serde(rename = "gamma_sparse")]
    pub gamma: Vec<f64>,
}

impl Breakpoint {
    pub fn dense_gamma(&self, n: usize) -> Array1<f64> {
        let mut g = Array1::zeros(n);
        for (&j, &v) in self.active.iter().zip(&self.gamma) {
            g[j] = v;
        }
        g
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularizationPath {
    pub lambda_max: f64,
    /// Strictly decreasing in λ; the first entry is (λ_max, ∅).
    pub breakpoints: Vec<Breakpoint>,
    /// Instance count of the originating problem.
    pub n: usize,
    /// True when the path stopped early because max_active was reached.
    pub truncated: bool,
}

impl RegularizationPath {
    /// Smallest λ the path reaches.
    pub fn lambda_min(&self) -> f64 {
        self.breakpoints.last().map(|b| b.lambda).unwrap_or(self.lambda_max)
    }

    /// Exact solution at any λ covered by the path: affine interpolation
    /// between the bracketing breakpoints. Above λ_max the solution is zero;
    /// below the final breakpoint the final solution is returned.
    pub fn gamma_at(&self, lambda: f64) -> Array1<f64> {
        let n = self.n;
        if lambda >= self.lambda_max || self.breakpoints.is_empty() {
            return Array1::zeros(n);
        }
        let last = self.breakpoints.last().unwrap();
        if lambda <= last.lambda {
            return last.dense_gamma(n);
        }
        // Find k with λ_{k+1} < λ ≤ λ_k.
        let mut k = 0;
        while k + 1 < self.breakpoints.len() && self.breakpoints[k + 1].lambda >= lambda {
            k += 1;
        }
        let hi = &self.breakpoints[k];
        let lo = &self.breakpoints[k + 1];
        let w = (hi.lambda - lambda) / (hi.lambda - lo.lambda);
        let mut g = hi.dense_gamma(n);
        g *= 1.0 - w;
        g.scaled_add(w, &lo.dense_gamma(n));
        g
    }

    /// JSON export: a list of breakpoint objects
    /// {lambda, active, signs, gamma_sparse}.
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.breakpoints)?)
    }

    /// Long-format CSV export (lambda, instance, gamma), one row per active
    /// instance per breakpoint, ready for path plotting.
    pub fn to_csv_long_string(&self) -> String {
        let mut out = String::from("lambda,instance,gamma\n");
        for bp in &self.breakpoints {
            for (&j, &g) in bp.active.iter().zip(&bp.gamma) {
                out.push_str(&format!("{},{},{}\n", bp.lambda, j, g));
            }
        }
        out
    }
}

/// Worst KKT residual of a breakpoint against the projected problem:
/// max over active j of |c_j − λ·s_j| and over inactive j of
/// max(0, |c_j| − λ(1+slack)), with c = (I−H)(y − γ).
pub fn kkt_violation(pre: &Preconditioner, y: ArrayView1<f64>, bp: &Breakpoint) -> f64 {
    let n = pre.n();
    let gamma = bp.dense_gamma(n);
    let resid = &y - &gamma;
    let c = pre.kernel_apply(resid.view());
    let lambda = bp.lambda;
    let mut is_active = vec![false; n];
    let mut viol: f64 = 0.0;
    for (&j, &s) in bp.active.iter().zip(&bp.signs) {
        is_active[j] = true;
        viol = viol.max((c[j] - lambda * s).abs());
    }
    for j in 0..n {
        if !is_active[j] {
            viol = viol.max((c[j].abs() - lambda * (1.0 + KKT_INACTIVE_SLACK)).max(0.0));
        }
    }
    viol
}

/// Largest KKT residual over all breakpoints of a path.
pub fn max_kkt_violation(pre: &Preconditioner, y: ArrayView1<f64>, path: &RegularizationPath) -> f64 {
    path.breakpoints
        .iter()
        .map(|bp| kkt_violation(pre, y, bp))
        .fold(0.0, f64::max)
}

/// Cholesky factor of a growing/shrinking principal submatrix K_AA.
/// Rows are stored ragged (row i has i+1 entries).
struct GrowingCholesky {
    l: Vec<Vec<f64>>,
}

impl GrowingCholesky {
    fn new() -> Self {
        GrowingCholesky { l: Vec::new() }
    }

    fn size(&self) -> usize {
        self.l.len()
    }

    /// Appends one index. `col` holds K[a_i, j] for current members a_i in
    /// insertion order, followed by K_jj. Fails if the extended matrix is
    /// not numerically positive definite.
    fn append(&mut self, col: &[f64]) -> std::result::Result<(), String> {
        let m = self.size();
        debug_assert_eq!(col.len(), m + 1);
        let mut w = vec![0.0; m];
        for i in 0..m {
            let mut s = col[i];
            for t in 0..i {
                s -= self.l[i][t] * w[t];
            }
            w[i] = s / self.l[i][i];
        }
        let d = col[m] - w.iter().map(|x| x * x).sum::<f64>();
        let floor = 1e-13 * col[m].abs().max(1e-300);
        if !(d > floor) {
            return Err(format!("loss of positive definiteness (pivot {d:.3e})"));
        }
        w.push(d.sqrt());
        self.l.push(w);
        Ok(())
    }

    /// Removes the member at insertion position `q`, re-triangularizing the
    /// remaining rows with Givens rotations (right-multiplication preserves
    /// L·Lᵀ, hence the factored submatrix).
    fn remove(&mut self, q: usize) {
        self.l.remove(q);
        let m = self.size();
        // Rows q.. now have one entry too many; zero the (i, i+1) entries.
        for i in q..m {
            let a = self.l[i][i];
            let b = self.l[i][i + 1];
            let r = a.hypot(b);
            if r == 0.0 {
                continue;
            }
            let (c, s) = (a / r, b / r);
            for row in self.l[i..].iter_mut() {
                let x = row[i];
                let y = row[i + 1];
                row[i] = c * x + s * y;
                row[i + 1] = c * y - s * x;
            }
            self.l[i][i + 1] = 0.0;
        }
        for (i, row) in self.l.iter_mut().enumerate() {
            row.truncate(i + 1);
        }
        // Canonical factor: nonnegative diagonal. Column sign flips
        // (right-multiplication by ±1) keep L·Lᵀ intact.
        for j in 0..m {
            if self.l[j][j] < 0.0 {
                for row in self.l[j..].iter_mut() {
                    row[j] = -row[j];
                }
            }
        }
    }

    /// Solves L·Lᵀ·x = b.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.size();
        debug_assert_eq!(b.len(), m);
        let mut x = vec![0.0; m];
        for i in 0..m {
            let mut s = b[i];
            for t in 0..i {
                s -= self.l[i][t] * x[t];
            }
            x[i] = s / self.l[i][i];
        }
        for i in (0..m).rev() {
            let mut s = x[i];
            for t in (i + 1)..m {
                s -= self.l[t][i] * x[t];
            }
            x[i] = s / self.l[i][i];
        }
        x
    }
}

/// Traces the full regularization path with default options.
pub fn lasso_path(pre: &Preconditioner, y: ArrayView1<f64>) -> Result<RegularizationPath> {
    lasso_path_with(pre, y, PathOptions::default())
}

pub fn lasso_path_with(
    pre: &Preconditioner,
    y: ArrayView1<f64>,
    opts: PathOptions,
) -> Result<RegularizationPath> {
    let n = pre.n();
    if pre.kernel_dim() == 0 {
        return Err(Error::NoKernelSpace);
    }
    if y.len() != n {
        return Err(Error::ShapeMismatch {
            what: "response",
            expected: format!("{n}"),
            got: format!("{}", y.len()),
        });
    }
    if !(opts.lambda_min_factor > 0.0 && opts.lambda_min_factor < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "lambda_min_factor must lie in (0, 1), got {}",
            opts.lambda_min_factor
        )));
    }
    if opts.max_active == Some(0) {
        return Err(Error::InvalidConfig("max_active must be at least 1".into()));
    }
    let cap = opts.max_active.unwrap_or(usize::MAX).min(pre.kernel_dim());

    let c0 = pre.kernel_apply(y);
    let lambda_max = c0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut path = RegularizationPath {
        lambda_max,
        breakpoints: vec![Breakpoint {
            lambda: lambda_max,
            active: vec![],
            signs: vec![],
            gamma: vec![],
        }],
        n,
        truncated: false,
    };
    if lambda_max == 0.0 {
        // y already lies in the design span; nothing to shrink.
        return Ok(path);
    }
    let lambda_min = opts.lambda_min_factor * lambda_max;
    let max_bps = opts.max_breakpoints.unwrap_or(20 * n + 64);
    let t_eps = 1e-12 * lambda_max;
    let tie = 1e-13 * lambda_max;

    // Column j of K = I − H, as a dense vector.
    let kernel_column = |j: usize| -> Array1<f64> {
        let mut e = Array1::zeros(n);
        e[j] = 1.0;
        pre.kernel_apply(e.view())
    };

    let mut active: Vec<usize> = Vec::new();
    let mut signs: Vec<f64> = Vec::new();
    let mut in_active = vec![false; n];
    let mut chol = GrowingCholesky::new();
    let mut lambda = lambda_max;

    // The first boundary crossing happens at λ_max itself: every coordinate
    // whose correlation sits at the max enters there.
    for j in 0..n {
        if c0[j].abs() >= lambda_max - tie && active.len() < cap {
            let col = kernel_column(j);
            let colv: Vec<f64> = active.iter().map(|&i| col[i]).chain([col[j]]).collect();
            chol.append(&colv).map_err(|detail| Error::PathBreakdown {
                detail,
                prefix: Box::new(path.clone()),
            })?;
            active.push(j);
            signs.push(if c0[j] >= 0.0 { 1.0 } else { -1.0 });
            in_active[j] = true;
        }
    }

    // γ on the current active set solved exactly at λ.
    let solve_gamma = |chol: &GrowingCholesky, active: &[usize], signs: &[f64], lam: f64| {
        let rhs: Vec<f64> = active
            .iter()
            .zip(signs)
            .map(|(&j, &s)| c0[j] - lam * s)
            .collect();
        chol.solve(&rhs)
    };

    let emit = |path: &mut RegularizationPath, lam: f64, active: &[usize], signs: &[f64], gamma: &[f64]| {
        let mut idx: Vec<usize> = (0..active.len()).collect();
        idx.sort_unstable_by_key(|&i| active[i]);
        path.breakpoints.push(Breakpoint {
            lambda: lam,
            active: idx.iter().map(|&i| active[i]).collect(),
            signs: idx.iter().map(|&i| signs[i]).collect(),
            gamma: idx.iter().map(|&i| gamma[i]).collect(),
        });
    };

    #[derive(Clone, Copy)]
    enum Event {
        Enter(usize, f64), // (instance, boundary sign)
        Drop(usize),       // position within `active`
    }

    loop {
        if lambda <= lambda_min {
            break;
        }
        if path.breakpoints.len() > max_bps {
            return Err(Error::PathBreakdown {
                detail: format!("breakpoint budget {max_bps} exceeded"),
                prefix: Box::new(path),
            });
        }

        // Segment direction: K_AA d = s.
        let d = chol.solve(&signs);
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::PathBreakdown {
                detail: "non-finite segment direction".into(),
                prefix: Box::new(path),
            });
        }
        let mut d_full = Array1::zeros(n);
        for (pos, &j) in active.iter().enumerate() {
            d_full[j] = d[pos];
        }
        let a = pre.kernel_apply(d_full.view());

        let gamma_now = solve_gamma(&chol, &active, &signs, lambda);
        let mut g_full = Array1::zeros(n);
        for (pos, &j) in active.iter().enumerate() {
            g_full[j] = gamma_now[pos];
        }
        // Exact correlations at the current λ.
        let c = {
            let mut c = c0.clone();
            c -= &pre.kernel_apply(g_full.view());
            c
        };

        // Candidate events along the segment (t = distance in λ).
        let mut events: Vec<(f64, Event)> = Vec::new();
        for j in 0..n {
            if in_active[j] {
                continue;
            }
            let denom_plus = 1.0 - a[j];
            if denom_plus > 1e-12 {
                let t = (lambda - c[j]) / denom_plus;
                if t > t_eps {
                    events.push((t, Event::Enter(j, 1.0)));
                }
            }
            let denom_minus = 1.0 + a[j];
            if denom_minus > 1e-12 {
                let t = (lambda + c[j]) / denom_minus;
                if t > t_eps {
                    events.push((t, Event::Enter(j, -1.0)));
                }
            }
        }
        for (pos, (&g, &dd)) in gamma_now.iter().zip(&d).enumerate() {
            if dd != 0.0 {
                let t = -g / dd;
                if t.is_finite() && t > t_eps {
                    events.push((t, Event::Drop(pos)));
                }
            }
        }

        let t_end = lambda - lambda_min;
        let best_event_t = events
            .iter()
            .map(|(t, _)| *t)
            .fold(f64::INFINITY, f64::min);

        if t_end <= best_event_t {
            // Terminal breakpoint at λ_min.
            let gamma_end = solve_gamma(&chol, &active, &signs, lambda_min);
            emit(&mut path, lambda_min, &active, &signs, &gamma_end);
            break;
        }

        let lambda_new = lambda - best_event_t;
        let mut entries: Vec<(usize, f64)> = Vec::new();
        let mut drops: Vec<usize> = Vec::new();
        for (t, e) in &events {
            if *t <= best_event_t + tie {
                match e {
                    Event::Enter(j, s) => entries.push((*j, *s)),
                    Event::Drop(pos) => drops.push(*pos),
                }
            }
        }

        // Dropped coefficients are exactly zero at λ_new, so they leave the
        // support before the breakpoint is recorded. Entering variables
        // cross their boundary at λ_new but still carry γ = 0 there; they
        // join the active set only after the breakpoint, for the next
        // segment, so each breakpoint holds the exact support at its λ.
        drops.sort_unstable_by(|x, y| y.cmp(x));
        for pos in drops {
            let j = active.remove(pos);
            signs.remove(pos);
            in_active[j] = false;
            chol.remove(pos);
        }

        lambda = lambda_new;
        let gamma_new = solve_gamma(&chol, &active, &signs, lambda);
        emit(&mut path, lambda, &active, &signs, &gamma_new);

        entries.sort_unstable_by_key(|&(j, _)| j);
        let mut hit_cap = false;
        for (j, s) in entries {
            if in_active[j] {
                continue;
            }
            if active.len() >= cap {
                hit_cap = true;
                continue;
            }
            let col = kernel_column(j);
            let colv: Vec<f64> = active.iter().map(|&i| col[i]).chain([col[j]]).collect();
            if let Err(detail) = chol.append(&colv) {
                return Err(Error::PathBreakdown {
                    detail,
                    prefix: Box::new(path),
                });
            }
            active.push(j);
            signs.push(s);
            in_active[j] = true;
        }
        if hit_cap {
            path.truncated = true;
            break;
        }
    }

    Ok(path)
}
