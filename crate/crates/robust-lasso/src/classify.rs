//! Final-stage classifiers: a linear one-vs-rest SVM trained by seeded
//! subgradient descent, and a label-propagation baseline that classifies
//! through diffusion states instead of feature vectors.
//!
//! The SVM minimises, per class, the squared-hinge objective
//! `lambda/2 ||w||^2 + (1/n) sum_i max(0, 1 - t_i w'z_i)^2` with
//! `lambda = 1 / (reg_c * n)` and `z_i` the feature row augmented by a
//! constant 1 for the bias. Training runs a fixed number of epochs with a
//! seeded per-epoch shuffle and a `1 / (lambda (n + t))` step size, so
//! results are bitwise reproducible. No exact QP: determinism and zero
//! solver dependencies matter more here than margin exactness.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tdca::graph::DiffusionGraph;
use crate::tdca::walk::{lazy_random_walk, DEFAULT_WALK_MAX_ITER, DEFAULT_WALK_TOL};

/// Knobs for [`train_linear_with`].
#[derive(Debug, Clone)]
pub struct TrainOptions {
    /// Full passes over the shuffled training set, per class model.
    pub epochs: usize,
    /// Seed for the epoch shuffles; each class model derives its own stream.
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 100,
            seed: 0,
        }
    }
}

/// One-vs-rest linear classifier. One weight row per class, bias last.
#[derive(Debug, Clone)]
pub struct LinearModel {
    classes: Vec<usize>,
    /// classes x (d + 1); the trailing column multiplies the constant 1.
    weights: Array2<f64>,
    reg_c: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonModel {
    classes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    reg_c: f64,
}

impl LinearModel {
    /// Class ids in score order (ascending id).
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    /// Weight matrix, one row per class, bias in the last column.
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn reg_c(&self) -> f64 {
        self.reg_c
    }

    /// Feature dimension the model expects (without the bias column).
    pub fn n_features(&self) -> usize {
        self.weights.ncols() - 1
    }

    /// Rebuilds a model from its parts, validating shape and finiteness.
    pub fn from_parts(classes: Vec<usize>, weights: Array2<f64>, reg_c: f64) -> Result<Self> {
        if classes.len() != weights.nrows() || weights.ncols() < 2 {
            return Err(Error::ShapeMismatch {
                what: "model weights",
                expected: format!("{} x (d + 1) with d >= 1", classes.len()),
                got: format!("{:?}", weights.dim()),
            });
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("model weights must be finite".into()));
        }
        if !(reg_c > 0.0) {
            return Err(Error::InvalidConfig(
                "regularization must be positive".into(),
            ));
        }
        Ok(LinearModel {
            classes,
            weights,
            reg_c,
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        let doc = JsonModel {
            classes: self.classes.clone(),
            weights: self.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
            reg_c: self.reg_c,
        };
        serde_json::to_string_pretty(&doc).map_err(Error::from)
    }

    pub fn from_json_string(text: &str) -> Result<Self> {
        let doc: JsonModel = serde_json::from_str(text)?;
        let rows = doc.weights.len();
        let cols = doc.weights.first().map_or(0, |r| r.len());
        if doc.weights.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged weight rows".into()));
        }
        let weights = Array2::from_shape_vec(
            (rows, cols),
            doc.weights.into_iter().flatten().collect(),
        )
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
        LinearModel::from_parts(doc.classes, weights, doc.reg_c)
    }
}

/// Trains the one-vs-rest model with default epochs and seed.
pub fn train_linear(
    features: ArrayView2<f64>,
    class_ids: &[usize],
    reg_c: f64,
) -> Result<LinearModel> {
    train_linear_with(features, class_ids, reg_c, &TrainOptions::default())
}

/// Trains one squared-hinge subgradient model per class.
///
/// Class models are independent and train in parallel, each on its own
/// seeded shuffle stream, so the result does not depend on thread timing.
pub fn train_linear_with(
    features: ArrayView2<f64>,
    class_ids: &[usize],
    reg_c: f64,
    opts: &TrainOptions,
) -> Result<LinearModel> {
    let n = features.nrows();
    if class_ids.len() != n {
        return Err(Error::ShapeMismatch {
            what: "training labels",
            expected: n.to_string(),
            got: class_ids.len().to_string(),
        });
    }
    if !(reg_c > 0.0) {
        return Err(Error::InvalidConfig(
            "regularization must be positive".into(),
        ));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "training features must be finite".into(),
        ));
    }
    let mut classes: Vec<usize> = class_ids.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "training needs at least two classes, got {}",
            classes.len()
        )));
    }
    if opts.epochs == 0 {
        return Err(Error::InvalidConfig("epoch count must be positive".into()));
    }

    let z = augment(features);
    let lambda = 1.0 / (reg_c * n as f64);
    let rows: Vec<Array1<f64>> = classes
        .par_iter()
        .map(|&c| {
            let targets: Vec<f64> = class_ids
                .iter()
                .map(|&y| if y == c { 1.0 } else { -1.0 })
                .collect();
            let seed = opts.seed ^ (c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            train_binary(&z, &targets, lambda, opts.epochs, seed)
        })
        .collect();

    let mut weights = Array2::zeros((classes.len(), z.ncols()));
    for (r, row) in rows.into_iter().enumerate() {
        weights.row_mut(r).assign(&row);
    }
    LinearModel::from_parts(classes, weights, reg_c)
}

fn augment(features: ArrayView2<f64>) -> Array2<f64> {
    let (n, d) = features.dim();
    let mut z = Array2::ones((n, d + 1));
    z.slice_mut(ndarray::s![.., ..d]).assign(&features);
    z
}

fn train_binary(
    z: &Array2<f64>,
    targets: &[f64],
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Array1<f64> {
    let n = z.nrows();
    let mut w = Array1::<f64>::zeros(z.ncols());
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // The squared hinge has unbounded gradients, so a bare 1/(lambda t)
    // schedule diverges. Offset the schedule until the first step is at most
    // 1/(2 max ||z||^2): a single-sample update then never overshoots its
    // own quadratic, and the decay still follows 1/t afterwards.
    let max_row_norm2 = z
        .rows()
        .into_iter()
        .map(|r| r.dot(&r))
        .fold(0.0f64, f64::max);
    let t0 = (n as f64).max(2.0 * max_row_norm2 / lambda);
    let mut t = 0u64;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * (t0 + t as f64));
            let zi = z.row(i);
            let margin = targets[i] * w.dot(&zi);
            w.mapv_inplace(|v| v * (1.0 - eta * lambda));
            if margin < 1.0 {
                w.scaled_add(eta * 2.0 * (1.0 - margin) * targets[i], &zi);
            }
        }
    }
    w
}

/// Per-class decision scores, one row per instance.
pub fn decision_values(model: &LinearModel, features: ArrayView2<f64>) -> Result<Array2<f64>> {
    if features.ncols() != model.n_features() {
        return Err(Error::ShapeMismatch {
            what: "prediction features",
            expected: format!("{} columns", model.n_features()),
            got: format!("{} columns", features.ncols()),
        });
    }
    Ok(augment(features).dot(&model.weights.t()))
}

/// Predicted class per row: argmax of the scores, ties to the lowest id.
pub fn predict(model: &LinearModel, features: ArrayView2<f64>) -> Result<Vec<usize>> {
    let scores = decision_values(model, features)?;
    Ok(scores
        .rows()
        .into_iter()
        .map(|row| model.classes[argmax_lowest(row)])
        .collect())
}

fn argmax_lowest(scores: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = i;
        }
    }
    best
}

/// Fraction of exact matches between predictions and ground truth.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            what: "accuracy inputs",
            expected: truth.len().to_string(),
            got: pred.len().to_string(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput(
            "accuracy of an empty prediction set is undefined".into(),
        ));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Classifies every node from a partial seed labelling by diffusion mass.
///
/// Runs the restarted walks, then scores node k for class c as the mean
/// stationary mass node k places on c's seeds; the per-class mean keeps
/// classes with many seeds from winning on count alone. Ties go to the
/// lowest class id. Seeded nodes are scored like any other node; with
/// `p_r >= 0.5` and balanced seeds their own restart mass keeps their label.
pub fn lrw_propagate(
    g: &DiffusionGraph,
    seed_labels: &[Option<usize>],
    restart_prob: f64,
) -> Result<Vec<usize>> {
    let n = g.n_nodes();
    if seed_labels.len() != n {
        return Err(Error::ShapeMismatch {
            what: "seed labels",
            expected: n.to_string(),
            got: seed_labels.len().to_string(),
        });
    }
    let mut classes: Vec<usize> = seed_labels.iter().flatten().copied().collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.is_empty() {
        return Err(Error::InvalidInput(
            "label propagation needs at least one seeded node".into(),
        ));
    }

    let states = lazy_random_walk(g, restart_prob, DEFAULT_WALK_TOL, DEFAULT_WALK_MAX_ITER)?;
    let seeds_per_class: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| {
            (0..n)
                .filter(|&j| seed_labels[j] == Some(c))
                .collect()
        })
        .collect();

    Ok((0..n)
        .map(|k| {
            let state = states.state(k);
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (ci, seeds) in seeds_per_class.iter().enumerate() {
                let score =
                    seeds.iter().map(|&j| state[j]).sum::<f64>() / seeds.len() as f64;
                if score > best_score {
                    best_score = score;
                    best = ci;
                }
            }
            classes[best]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tdca::graph::build_graph;
    use crate::tdca::walk::stationary_oracle;
    use ndarray::{array, Array2};

    fn blobs(centers: &[[f64; 2]], per_class: usize, std: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = rand_distr::Normal::new(0.0, std).unwrap();
        let n = centers.len() * per_class;
        let mut f = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for (c, center) in centers.iter().enumerate() {
            for i in 0..per_class {
                let row = c * per_class + i;
                f[(row, 0)] = center[0] + dist.sample(&mut rng);
                f[(row, 1)] = center[1] + dist.sample(&mut rng);
                y.push(c);
            }
        }
        (f, y)
    }

    #[test]
    fn separable_blobs_train_to_perfect_accuracy() {
        let (f, y) = blobs(&[[0.0, 0.0], [5.0, 5.0]], 20, 0.3, 1);
        let model = train_linear(f.view(), &y, 1.0).unwrap();
        let pred = predict(&model, f.view()).unwrap();
        assert_eq!(accuracy(&pred, &y).unwrap(), 1.0);
    }

    #[test]
    fn collinear_three_class_holdout() {
        // Means on a line, well separated relative to the spread; a single
        // direction must still split three ways, which plain-hinge updates
        // handle poorly but the squared hinge separates cleanly.
        let (f, y) = blobs(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]], 100, 0.1, 7);
        let mut train_rows = Vec::new();
        let mut test_rows = Vec::new();
        for i in 0..300 {
            if i % 10 < 7 {
                train_rows.push(i);
            } else {
                test_rows.push(i);
            }
        }
        let select = |rows: &[usize]| {
            let mut m = Array2::zeros((rows.len(), 2));
            let mut labels = Vec::with_capacity(rows.len());
            for (r, &i) in rows.iter().enumerate() {
                m.row_mut(r).assign(&f.row(i));
                labels.push(y[i]);
            }
            (m, labels)
        };
        let (ftr, ytr) = select(&train_rows);
        let (fte, yte) = select(&test_rows);
        let model = train_linear(ftr.view(), &ytr, 1.0).unwrap();
        let pred = predict(&model, fte.view()).unwrap();
        let acc = accuracy(&pred, &yte).unwrap();
        assert!(acc >= 0.95, "held-out accuracy {acc}");
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let (f, y) = blobs(&[[0.0, 1.0], [2.0, -1.0], [4.0, 0.5]], 15, 0.4, 3);
        let a = train_linear(f.view(), &y, 0.7).unwrap();
        let b = train_linear(f.view(), &y, 0.7).unwrap();
        assert_eq!(a.weights(), b.weights());
        let c = train_linear_with(
            f.view(),
            &y,
            0.7,
            &TrainOptions {
                seed: 9,
                ..TrainOptions::default()
            },
        )
        .unwrap();
        assert_ne!(a.weights(), c.weights());
    }

    #[test]
    fn rejects_degenerate_training_inputs() {
        let (f, _) = blobs(&[[0.0, 0.0], [1.0, 1.0]], 5, 0.1, 2);
        let one_class = vec![3usize; 10];
        match train_linear(f.view(), &one_class, 1.0) {
            Err(Error::InvalidInput(msg)) => assert!(msg.contains("two classes")),
            other => panic!("expected single-class error, got {other:?}"),
        }
        let y: Vec<usize> = (0..10).map(|i| i % 2).collect();
        match train_linear(f.view(), &y, 0.0) {
            Err(Error::InvalidConfig(msg)) => {
                assert_eq!(msg, "regularization must be positive")
            }
            other => panic!("expected config error, got {other:?}"),
        }
        assert!(train_linear(f.view(), &y[..5], 1.0).is_err());
    }

    #[test]
    fn prediction_ties_go_to_lowest_class_id() {
        // Both classes share identical weight rows, so every score ties.
        let weights = array![[0.3, -0.2, 0.1], [0.3, -0.2, 0.1]];
        let model = LinearModel::from_parts(vec![4, 9], weights, 1.0).unwrap();
        let f = array![[1.0, 2.0], [-3.0, 0.5]];
        assert_eq!(predict(&model, f.view()).unwrap(), vec![4, 4]);
    }

    #[test]
    fn predict_is_argmax_invariant_under_monotone_shift() {
        let (f, y) = blobs(&[[0.0, 0.0], [3.0, 3.0]], 10, 0.2, 5);
        let model = train_linear(f.view(), &y, 1.0).unwrap();
        let base = predict(&model, f.view()).unwrap();
        // Double every score and add a constant: argmax cannot move.
        let mut weights = model.weights().clone() * 2.0;
        let bias_col = weights.ncols() - 1;
        weights.column_mut(bias_col).mapv_inplace(|v| v + 5.0);
        let shifted = LinearModel::from_parts(model.classes().to_vec(), weights, 1.0).unwrap();
        assert_eq!(predict(&shifted, f.view()).unwrap(), base);
    }

    #[test]
    fn accuracy_contract() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1], &[2, 2]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2], &[1, 3]).unwrap(), 0.5);
        assert!(accuracy(&[1], &[1, 2]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let (f, y) = blobs(&[[0.0, 0.0], [4.0, 4.0]], 8, 0.3, 11);
        let model = train_linear(f.view(), &y, 2.5).unwrap();
        let json = model.to_json_string().unwrap();
        let back = LinearModel::from_json_string(&json).unwrap();
        assert_eq!(back.classes(), model.classes());
        assert_eq!(back.weights(), model.weights());
        assert_eq!(back.reg_c(), model.reg_c());
        assert!(json.contains("\"classes\""));
        assert!(json.contains("\"reg_c\""));
    }

    #[test]
    fn predict_rejects_wrong_dimension() {
        let (f, y) = blobs(&[[0.0, 0.0], [4.0, 4.0]], 5, 0.3, 13);
        let model = train_linear(f.view(), &y, 1.0).unwrap();
        let wide = Array2::zeros((2, 5));
        assert!(predict(&model, wide.view()).is_err());
    }

    #[test]
    fn propagation_fills_unseeded_two_node_graph() {
        let f = array![[1.0, 0.0], [0.0, 1.0]];
        let g = build_graph(f.view(), 1).unwrap();
        let labels = lrw_propagate(&g, &[Some(7), None], 0.5).unwrap();
        assert_eq!(labels, vec![7, 7]);
    }

    #[test]
    fn propagation_matches_oracle_scores_on_two_clusters() {
        // Two tight 5-node clusters, two seeds each; the remaining nodes
        // must adopt their cluster's class, and the labels must agree with
        // scores computed directly from the resolvent oracle.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut f = Array2::zeros((10, 2));
        for i in 0..10 {
            let center = if i < 5 { [1.0, 0.0] } else { [0.0, 1.0] };
            f[(i, 0)] = center[0] + rng.gen_range(-0.05..0.05);
            f[(i, 1)] = center[1] + rng.gen_range(-0.05..0.05);
        }
        let g = build_graph(f.view(), 3).unwrap();
        let mut seeds = vec![None; 10];
        seeds[0] = Some(0);
        seeds[1] = Some(0);
        seeds[5] = Some(1);
        seeds[6] = Some(1);
        let labels = lrw_propagate(&g, &seeds, 0.5).unwrap();
        assert_eq!(&labels[..5], &[0; 5]);
        assert_eq!(&labels[5..], &[1; 5]);

        let oracle = stationary_oracle(&g, 0.5).unwrap();
        for k in 0..10 {
            let row = oracle.state(k);
            let score0 = (row[0] + row[1]) / 2.0;
            let score1 = (row[5] + row[6]) / 2.0;
            let expect = if score0 >= score1 { 0 } else { 1 };
            assert_eq!(labels[k], expect, "node {k}");
        }
    }

    #[test]
    fn fully_seeded_balanced_graph_keeps_labels() {
        let (f, y) = blobs(&[[1.0, 0.2], [0.1, 1.3]], 6, 0.1, 19);
        let g = build_graph(f.view(), 4).unwrap();
        let seeds: Vec<Option<usize>> = y.iter().map(|&c| Some(c)).collect();
        for p_r in [0.5, 0.75, 1.0] {
            let labels = lrw_propagate(&g, &seeds, p_r).unwrap();
            assert_eq!(labels, y, "p_r {p_r}");
        }
    }

    #[test]
    fn propagation_rejects_empty_seed_set() {
        let f = array![[1.0, 0.0], [0.0, 1.0]];
        let g = build_graph(f.view(), 1).unwrap();
        assert!(lrw_propagate(&g, &[None, None], 0.5).is_err());
        assert!(lrw_propagate(&g, &[None], 0.5).is_err());
    }
}
