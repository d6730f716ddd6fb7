//! Directed k-nearest-neighbour similarity graph over instances.
//!
//! Edge weight between feature rows psi_k and psi_l is
//! `omega = exp(<psi_k, psi_l>^2 / delta)` where `delta` is the median of
//! the squared inner products over all candidate neighbour pairs. Each row
//! of the transition matrix renormalises the weights of its k retained
//! neighbours, so `P` is row stochastic by construction. Neighbourhoods are
//! *not* symmetrised: `k -> l` being an edge says nothing about `l -> k`.
//!
//! Rows are L2-normalised before the inner products by default, which bounds
//! the exponent by `1/delta`; the raw formula is unbounded in the feature
//! scale and overflows for large rows. `GraphOptions::normalize = false`
//! keeps the literal formula for callers that have already scaled their
//! features.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Knobs for [`build_graph_with`].
#[derive(Debug, Clone)]
pub struct GraphOptions {
    /// L2-normalise feature rows before computing inner products.
    pub normalize: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions { normalize: true }
    }
}

/// Sparse directed similarity graph with row-stochastic transitions.
#[derive(Debug, Clone)]
pub struct DiffusionGraph {
    n_nodes: usize,
    /// Per-node neighbour indices, most similar first, self excluded.
    neighbors: Vec<Vec<usize>>,
    /// Similarity weights, parallel to `neighbors`.
    weights: Vec<Vec<f64>>,
    /// Transition probabilities, parallel to `neighbors`; each row sums to 1.
    trans: Vec<Vec<f64>>,
    delta: f64,
    uniform_fallback: bool,
}

impl DiffusionGraph {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Neighbour indices of `node`, most similar first.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    /// Similarity weights parallel to [`Self::neighbors`].
    pub fn edge_weights(&self, node: usize) -> &[f64] {
        &self.weights[node]
    }

    /// Transition probabilities parallel to [`Self::neighbors`].
    pub fn transition_probs(&self, node: usize) -> &[f64] {
        &self.trans[node]
    }

    /// Median squared inner product used as the similarity bandwidth.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// True when all inner products were zero and the graph fell back to
    /// uniform weights over the neighbour sets.
    pub fn used_uniform_fallback(&self) -> bool {
        self.uniform_fallback
    }

    /// Dense transition matrix; zero outside the neighbour sets.
    pub fn transition_matrix(&self) -> Array2<f64> {
        let n = self.n_nodes;
        let mut p = Array2::zeros((n, n));
        for k in 0..n {
            for (j, &l) in self.neighbors[k].iter().enumerate() {
                p[(k, l)] = self.trans[k][j];
            }
        }
        p
    }

    /// Edge list export with header `src,dst,weight,prob`.
    pub fn to_edge_list_csv_string(&self) -> String {
        let mut out = String::from("src,dst,weight,prob\n");
        for k in 0..self.n_nodes {
            for (j, &l) in self.neighbors[k].iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    k, l, self.weights[k][j], self.trans[k][j]
                ));
            }
        }
        out
    }
}

/// Builds the neighbour graph with default options (rows L2-normalised).
pub fn build_graph(features: ArrayView2<f64>, k: usize) -> Result<DiffusionGraph> {
    build_graph_with(features, k, &GraphOptions::default())
}

/// Builds the directed kNN similarity graph.
///
/// Keeps the `k` most similar other nodes per node (all of them when
/// `k >= n`), sets the bandwidth `delta` to the median squared inner
/// product over the retained pairs, and normalises each neighbour set's
/// weights into transition probabilities. All-zero inner products (for
/// example all-zero features) degrade to uniform weights with the
/// [`DiffusionGraph::used_uniform_fallback`] flag set.
pub fn build_graph_with(
    features: ArrayView2<f64>,
    k: usize,
    opts: &GraphOptions,
) -> Result<DiffusionGraph> {
    let n = features.nrows();
    if k == 0 {
        return Err(Error::InvalidConfig(
            "neighbor count must be at least 1".into(),
        ));
    }
    if n < 2 {
        return Err(Error::InvalidInput(
            "similarity graph needs at least two instances".into(),
        ));
    }
    for ((row, col), &v) in features.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }

    let mut rows = features.to_owned();
    if opts.normalize {
        for mut row in rows.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|v| v / norm);
            }
        }
    }

    let k_eff = k.min(n - 1);
    let gram = rows.dot(&rows.t());

    // Top-k by squared inner product; exp(q/delta) is increasing in q for
    // delta > 0, so the ranking does not depend on delta.
    let mut neighbors: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut sims: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut cand: Vec<(usize, f64)> = (0..n)
            .filter(|&l| l != i)
            .map(|l| {
                let g = gram[(i, l)];
                (l, g * g)
            })
            .collect();
        cand.sort_unstable_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        cand.truncate(k_eff);
        neighbors.push(cand.iter().map(|&(l, _)| l).collect());
        sims.push(cand.iter().map(|&(_, q)| q).collect());
    }

    let mut pooled: Vec<f64> = sims.iter().flatten().copied().collect();
    pooled.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let m = pooled.len();
    let delta = if m % 2 == 1 {
        pooled[m / 2]
    } else {
        0.5 * (pooled[m / 2 - 1] + pooled[m / 2])
    };

    let mut weights: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut trans: Vec<Vec<f64>> = Vec::with_capacity(n);
    if delta == 0.0 {
        // Every candidate inner product is zero: the similarity carries no
        // information, treat all retained edges as equally likely.
        for nb in &neighbors {
            weights.push(vec![1.0; nb.len()]);
            trans.push(vec![1.0 / nb.len() as f64; nb.len()]);
        }
    } else {
        for q_row in &sims {
            weights.push(q_row.iter().map(|&q| (q / delta).exp()).collect());
            // The stored weight can overflow to infinity when delta is tiny;
            // the transition row is a softmax of q/delta, so shift by the row
            // max to keep it finite. Identical result when nothing overflows.
            let q_max = q_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let shifted: Vec<f64> = q_row.iter().map(|&q| ((q - q_max) / delta).exp()).collect();
            let total: f64 = shifted.iter().sum();
            trans.push(shifted.iter().map(|&e| e / total).collect());
        }
    }

    Ok(DiffusionGraph {
        n_nodes: n,
        neighbors,
        weights,
        trans,
        delta,
        uniform_fallback: delta == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_unit_rows(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Array2::<f64>::zeros((n, p));
        for mut row in m.rows_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let norm = row.dot(&row).sqrt();
            row.mapv_inplace(|v| v / norm);
        }
        m
    }

    #[test]
    fn identical_rows_give_uniform_transitions() {
        let f = array![[0.6, 0.8], [0.6, 0.8], [0.6, 0.8]];
        let g = build_graph(f.view(), 2).unwrap();
        assert_eq!(g.n_nodes(), 3);
        assert!((g.delta() - 1.0).abs() < 1e-12);
        let w0 = g.edge_weights(0);
        for &w in g.edge_weights(1) {
            assert_eq!(w, w0[0]);
        }
        for k in 0..3 {
            assert_eq!(g.transition_probs(k), &[0.5, 0.5]);
            assert_eq!(g.neighbors(k).len(), 2);
            assert!(!g.neighbors(k).contains(&k));
        }
    }

    #[test]
    fn rows_are_stochastic() {
        let f = random_unit_rows(40, 5, 3);
        let g = build_graph(f.view(), 7).unwrap();
        let p = g.transition_matrix();
        for k in 0..40 {
            let sum: f64 = p.row(k).sum();
            assert!((sum - 1.0).abs() <= 1e-12, "row {k} sums to {sum}");
            for l in 0..40 {
                if p[(k, l)] > 0.0 {
                    assert!(g.neighbors(k).contains(&l));
                }
            }
        }
    }

    #[test]
    fn matches_dense_brute_force() {
        // Fully connected case: every pair is a candidate, so the sparse
        // builder must agree with a direct dense evaluation of the formula.
        for seed in 0..5u64 {
            let f = random_unit_rows(5, 3, 100 + seed);
            let g = build_graph(f.view(), 4).unwrap();

            let mut qs = Vec::new();
            let mut q = Array2::zeros((5, 5));
            for i in 0..5 {
                for j in 0..5 {
                    if i != j {
                        let d = f.row(i).dot(&f.row(j));
                        q[(i, j)] = d * d;
                        qs.push(d * d);
                    }
                }
            }
            qs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let delta = 0.5 * (qs[qs.len() / 2 - 1] + qs[qs.len() / 2]);
            assert!((g.delta() - delta).abs() <= 1e-15);

            let p = g.transition_matrix();
            for i in 0..5 {
                let omega: Vec<f64> = (0..5)
                    .filter(|&j| j != i)
                    .map(|j| (q[(i, j)] / delta).exp())
                    .collect();
                let total: f64 = omega.iter().sum();
                for (pos, j) in (0..5).filter(|&j| j != i).enumerate() {
                    assert!(
                        (p[(i, j)] - omega[pos] / total).abs() <= 1e-12,
                        "P({i},{j}) off"
                    );
                }
                assert_eq!(p[(i, i)], 0.0);
            }
        }
    }

    #[test]
    fn zero_features_fall_back_to_uniform() {
        let f = Array2::zeros((4, 3));
        let g = build_graph(f.view(), 2).unwrap();
        assert!(g.used_uniform_fallback());
        assert_eq!(g.delta(), 0.0);
        for k in 0..4 {
            assert_eq!(g.transition_probs(k), &[0.5, 0.5]);
        }
    }

    #[test]
    fn oversized_k_means_fully_connected() {
        let f = random_unit_rows(6, 2, 9);
        let g = build_graph(f.view(), 100).unwrap();
        for k in 0..6 {
            assert_eq!(g.neighbors(k).len(), 5);
        }
    }

    #[test]
    fn normalization_matches_manual_scaling() {
        let base = random_unit_rows(8, 3, 42);
        let mut scaled = base.clone();
        for (i, mut row) in scaled.rows_mut().into_iter().enumerate() {
            row.mapv_inplace(|v| v * (1.0 + i as f64));
        }
        let g_norm = build_graph(scaled.view(), 3).unwrap();
        let g_raw = build_graph_with(base.view(), 3, &GraphOptions { normalize: false }).unwrap();
        let diff = (g_norm.transition_matrix() - g_raw.transition_matrix())
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(diff <= 1e-12, "transitions differ by {diff}");
        assert!((g_norm.delta() - g_raw.delta()).abs() <= 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = random_unit_rows(5, 2, 1);
        assert!(matches!(
            build_graph(f.view(), 0),
            Err(Error::InvalidConfig(_))
        ));
        let single = Array2::zeros((1, 2));
        assert!(build_graph(single.view(), 1).is_err());
        let mut bad = f.clone();
        bad[(2, 1)] = f64::NAN;
        match build_graph(bad.view(), 2) {
            Err(Error::NonFinite { row: 2, col: 1 }) => {}
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn edge_list_export_shape() {
        let f = random_unit_rows(5, 2, 5);
        let g = build_graph(f.view(), 2).unwrap();
        let csv = g.to_edge_list_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "src,dst,weight,prob");
        assert_eq!(lines.len(), 1 + 5 * 2);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 4);
    }
}
