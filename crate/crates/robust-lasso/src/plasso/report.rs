//! Turning a regularization path into an outlier call.
//!
//! The path orders instances: the larger the λ at which an instance's
//! coefficient leaves zero, the more outlier-like the instance. This module
//! ranks instances by that activation λ and picks how many of them to call
//! outliers, either by a caller-supplied count or by cross-validating a
//! classifier on what remains after each breakpoint's removals.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{accuracy, predict, train_linear};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::plasso::path::RegularizationPath;

/// How an [`OutlierReport`]'s selected set was chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Caller supplied the outlier count.
    Count(usize),
    /// Cross-validation over breakpoints with this many folds.
    Cv(usize),
}

/// Ranked outlier candidates plus the chosen cutoff.
#[derive(Debug, Clone, Serialize)]
pub struct OutlierReport {
    /// Instances ordered by activation λ, largest first; no duplicates.
    pub ranking: Vec<usize>,
    /// Activation λ per entry of `ranking`.
    pub activation_lambdas: Vec<f64>,
    /// Instances called outliers; a subset of the ranking prefix that had
    /// activated at the selection λ.
    pub selected: Vec<usize>,
    /// Absent when the report carries a ranking only.
    pub selection_rule: Option<SelectionRule>,
    /// (λ, mean held-out accuracy) per evaluated breakpoint; CV only.
    pub cv_trace: Option<Vec<(f64, f64)>>,
}

impl OutlierReport {
    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(Error::from)
    }

    /// Ranked CSV with header `rank,instance,activation_lambda,selected`.
    pub fn to_ranked_csv_string(&self) -> String {
        let mut out = String::from("rank,instance,activation_lambda,selected\n");
        for (pos, (&inst, &lambda)) in self
            .ranking
            .iter()
            .zip(&self.activation_lambdas)
            .enumerate()
        {
            let selected = self.selected.contains(&inst);
            out.push_str(&format!("{},{},{},{}\n", pos + 1, inst, lambda, selected));
        }
        out
    }
}

/// Ranks instances by how early on the path they activate.
///
/// An instance's activation λ is the largest λ at which its coefficient is
/// nonzero: the λ of the breakpoint preceding its first appearance in a
/// support set. Instances that never activate are excluded. Instances
/// activating at the same breakpoint are ordered by the magnitude of their
/// coefficient's slope over the following segment (steeper first), then by
/// index.
pub fn order_by_activation(path: &RegularizationPath) -> Result<OutlierReport> {
    if path.breakpoints.is_empty() {
        return Err(Error::InvalidInput("empty regularization path".into()));
    }
    let mut seen = vec![false; path.n];
    // (first-appearance breakpoint, slope magnitude, instance)
    let mut entries: Vec<(usize, f64, usize)> = Vec::new();
    for i in 1..path.breakpoints.len() {
        let prev_lambda = path.breakpoints[i - 1].lambda;
        let bp = &path.breakpoints[i];
        let width = prev_lambda - bp.lambda;
        for (pos, &j) in bp.active.iter().enumerate() {
            if !seen[j] {
                seen[j] = true;
                entries.push((i, (bp.gamma[pos] / width).abs(), j));
            }
        }
    }
    // Breakpoint index ascending is activation λ descending.
    entries.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(b.1.partial_cmp(&a.1).unwrap())
            .then(a.2.cmp(&b.2))
    });
    let ranking: Vec<usize> = entries.iter().map(|&(_, _, j)| j).collect();
    let activation_lambdas: Vec<f64> = entries
        .iter()
        .map(|&(i, _, _)| path.breakpoints[i - 1].lambda)
        .collect();
    Ok(OutlierReport {
        ranking,
        activation_lambdas,
        selected: Vec::new(),
        selection_rule: None,
        cv_trace: None,
    })
}

/// Calls the first `k` ranked instances outliers (all of them when fewer
/// than `k` ever activate).
pub fn select_outliers_count(path: &RegularizationPath, k: usize) -> Result<OutlierReport> {
    let mut report = order_by_activation(path)?;
    let take = k.min(report.ranking.len());
    report.selected = report.ranking[..take].to_vec();
    report.selection_rule = Some(SelectionRule::Count(k));
    Ok(report)
}

/// Knobs for [`select_outliers_cv_with`].
#[derive(Debug, Clone)]
pub struct CvOptions {
    /// Regularization constant handed to the classifier.
    pub reg_c: f64,
    /// Seed of the fold shuffle.
    pub shuffle_seed: u64,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            reg_c: 1.0,
            shuffle_seed: 0x5EED,
        }
    }
}

/// Picks the breakpoint whose removals classify best under k-fold CV.
pub fn select_outliers_cv(
    path: &RegularizationPath,
    ds: &Dataset,
    folds: usize,
) -> Result<OutlierReport> {
    select_outliers_cv_with(path, ds, folds, &CvOptions::default())
}

/// For every breakpoint: remove its active set, cross-validate the linear
/// classifier on the remainder, and keep the λ with the best mean held-out
/// accuracy. Ties go to the larger λ, which removes fewer instances.
/// Breakpoints whose remainder is smaller than the fold count, or whose
/// removal collapses the remainder to a single class, are skipped.
pub fn select_outliers_cv_with(
    path: &RegularizationPath,
    ds: &Dataset,
    folds: usize,
    opts: &CvOptions,
) -> Result<OutlierReport> {
    if folds < 2 {
        return Err(Error::InvalidConfig(
            "cross-validation needs at least two folds".into(),
        ));
    }
    if ds.n() != path.n {
        return Err(Error::ShapeMismatch {
            what: "cross-validation dataset",
            expected: format!("{} instances", path.n),
            got: format!("{} instances", ds.n()),
        });
    }
    let mut report = order_by_activation(path)?;
    let class_ids = ds.resolve_class_ids();

    let evals: Vec<Option<(usize, f64)>> = path
        .breakpoints
        .par_iter()
        .enumerate()
        .map(|(idx, bp)| {
            let mut removed = vec![false; path.n];
            for &j in &bp.active {
                removed[j] = true;
            }
            let keep: Vec<usize> = (0..path.n).filter(|&i| !removed[i]).collect();
            if keep.len() < folds {
                return None;
            }
            cv_mean_accuracy(ds, &class_ids, &keep, folds, opts)
                .ok()
                .map(|acc| (idx, acc))
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    let mut trace = Vec::new();
    for (idx, acc) in evals.into_iter().flatten() {
        trace.push((path.breakpoints[idx].lambda, acc));
        // Strict comparison: equal accuracy keeps the earlier breakpoint,
        // which has the larger λ and removes fewer instances.
        if best.map_or(true, |(_, prev)| acc > prev) {
            best = Some((idx, acc));
        }
    }
    let Some((winner, _)) = best else {
        return Err(Error::InvalidInput(
            "cross-validation could not evaluate any breakpoint".into(),
        ));
    };
    report.selected = path.breakpoints[winner].active.clone();
    report.selection_rule = Some(SelectionRule::Cv(folds));
    report.cv_trace = Some(trace);
    Ok(report)
}

/// Mean held-out accuracy of the classifier over seeded contiguous folds of
/// the shuffled `keep` rows.
fn cv_mean_accuracy(
    ds: &Dataset,
    class_ids: &[usize],
    keep: &[usize],
    folds: usize,
    opts: &CvOptions,
) -> Result<f64> {
    let mut order: Vec<usize> = keep.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.shuffle_seed);
    order.shuffle(&mut rng);

    let n = order.len();
    let base = n / folds;
    let extra = n % folds;
    let mut start = 0;
    let mut total = 0.0;
    for fold in 0..folds {
        let size = base + usize::from(fold < extra);
        let test_rows = &order[start..start + size];
        start += size;
        let train_rows: Vec<usize> = order
            .iter()
            .copied()
            .filter(|r| !test_rows.contains(r))
            .collect();

        let gather = |rows: &[usize]| -> (Array2<f64>, Vec<usize>) {
            let mut f = Array2::zeros((rows.len(), ds.p()));
            let mut y = Vec::with_capacity(rows.len());
            for (out_row, &r) in rows.iter().enumerate() {
                f.row_mut(out_row).assign(&ds.features.row(r));
                y.push(class_ids[r]);
            }
            (f, y)
        };
        let (train_f, train_y) = gather(&train_rows);
        let (test_f, test_y) = gather(test_rows);
        let model = train_linear(train_f.view(), &train_y, opts.reg_c)?;
        let pred = predict(&model, test_f.view())?;
        total += accuracy(&pred, &test_y)?;
    }
    Ok(total / folds as f64)
}
