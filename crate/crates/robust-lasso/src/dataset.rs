//! Dataset representation, label encoding, and synthetic generators.
//!
//! Instances are rows of a feature matrix with a real-encoded label each.
//! Generated datasets carry a ground-truth outlier mask laid out inliers
//! first, then outliers, both grouped by class.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod io;

/// Labeled instance collection.
///
/// `outlier_mask` is only present on generated data where the ground truth
/// is known; `class_ids` is absent on datasets loaded from plain files and
/// is reconstructed from the distinct label values on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// n×p feature rows.
    pub features: Array2<f64>,
    /// Real-encoded labels, length n.
    pub labels: Array1<f64>,
    /// Optional class index per instance.
    pub class_ids: Option<Vec<usize>>,
    /// Ground truth: true exactly on generated outliers.
    pub outlier_mask: Option<Vec<bool>>,
    /// Stable per-instance identifiers.
    pub instance_ids: Vec<u64>,
    /// Generator seed when the dataset is synthetic.
    pub seed: Option<u64>,
}

/// Feature rows without labels. The transductive stages accept only this
/// view of test data, so test labels cannot leak into training by type.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledSet {
    pub features: Array2<f64>,
    pub instance_ids: Vec<u64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    /// Checks the structural invariants: matching lengths, finite values,
    /// and at least one instance.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidInput("dataset has no instances".into()));
        }
        if self.labels.len() != n {
            return Err(Error::ShapeMismatch {
                what: "labels",
                expected: format!("{n}"),
                got: format!("{}", self.labels.len()),
            });
        }
        if let Some(mask) = &self.outlier_mask {
            if mask.len() != n {
                return Err(Error::ShapeMismatch {
                    what: "outlier_mask",
                    expected: format!("{n}"),
                    got: format!("{}", mask.len()),
                });
            }
        }
        if self.instance_ids.len() != n {
            return Err(Error::ShapeMismatch {
                what: "instance_ids",
                expected: format!("{n}"),
                got: format!("{}", self.instance_ids.len()),
            });
        }
        for (i, row) in self.features.outer_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        for (i, v) in self.labels.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i,
                    col: self.p(),
                });
            }
        }
        Ok(())
    }

    /// Design matrix for regression: feature columns plus an all-ones
    /// intercept column when requested.
    pub fn design_matrix(&self, intercept: bool) -> Array2<f64> {
        if !intercept {
            return self.features.clone();
        }
        let (n, p) = (self.n(), self.p());
        let mut phi = Array2::zeros((n, p + 1));
        phi.slice_mut(ndarray::s![.., ..p]).assign(&self.features);
        phi.column_mut(p).fill(1.0);
        phi
    }

    /// Class index per instance: the stored ids when present, otherwise the
    /// index of the nearest distinct label value (ascending order).
    pub fn resolve_class_ids(&self) -> Vec<usize> {
        if let Some(ids) = &self.class_ids {
            return ids.clone();
        }
        let mut distinct: Vec<f64> = self.labels.to_vec();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        self.labels
            .iter()
            .map(|y| nearest_index(&distinct, *y))
            .collect()
    }

    /// Count of mask-true instances; 0 when no mask is present.
    pub fn outlier_count(&self) -> usize {
        self.outlier_mask
            .as_ref()
            .map(|m| m.iter().filter(|&&b| b).count())
            .unwrap_or(0)
    }

    /// Drops labels, keeping features and ids.
    pub fn strip_labels(&self) -> UnlabeledSet {
        UnlabeledSet {
            features: self.features.clone(),
            instance_ids: self.instance_ids.clone(),
        }
    }

    /// New dataset containing the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let features = ndarray::stack(
            ndarray::Axis(0),
            &rows
                .iter()
                .map(|&i| self.features.row(i))
                .collect::<Vec<_>>(),
        )
        .expect("row shapes agree");
        Dataset {
            features,
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            class_ids: self
                .class_ids
                .as_ref()
                .map(|c| rows.iter().map(|&i| c[i]).collect()),
            outlier_mask: self
                .outlier_mask
                .as_ref()
                .map(|m| rows.iter().map(|&i| m[i]).collect()),
            instance_ids: rows.iter().map(|&i| self.instance_ids[i]).collect(),
            seed: self.seed,
        }
    }
}

fn nearest_index(sorted: &[f64], y: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, v) in sorted.iter().enumerate() {
        let d = (v - y).abs();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Mapping between class ids and the real values used as regression labels.
/// Class k maps to the real value k+1 in ascending class-id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCodec {
    classes: Vec<usize>,
}

impl LabelCodec {
    pub fn fit(class_ids: &[usize]) -> Result<Self> {
        if class_ids.is_empty() {
            return Err(Error::InvalidInput("cannot encode empty class list".into()));
        }
        let mut classes = class_ids.to_vec();
        classes.sort_unstable();
        classes.dedup();
        Ok(LabelCodec { classes })
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn encode(&self, class_ids: &[usize]) -> Result<Array1<f64>> {
        class_ids
            .iter()
            .map(|id| {
                self.classes
                    .binary_search(id)
                    .map(|pos| (pos + 1) as f64)
                    .map_err(|_| Error::InvalidInput(format!("unknown class id {id}")))
            })
            .collect::<Result<Vec<f64>>>()
            .map(Array1::from)
    }

    /// Nearest encoded value wins; used to decode regression predictions.
    pub fn decode(&self, values: &[f64]) -> Vec<usize> {
        let encoded: Vec<f64> = (1..=self.classes.len()).map(|k| k as f64).collect();
        values
            .iter()
            .map(|v| self.classes[nearest_index(&encoded, *v)])
            .collect()
    }
}

/// Encodes class ids as the real values 1, 2, ... in ascending class order
/// and returns the codec used, for decoding predictions later.
pub fn encode_labels(class_ids: &[usize]) -> Result<(Array1<f64>, LabelCodec)> {
    let codec = LabelCodec::fit(class_ids)?;
    let labels = codec.encode(class_ids)?;
    Ok((labels, codec))
}

/// Synthetic data model: Gaussian inlier blobs per class plus outliers drawn
/// uniformly from a box centered on each class mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub class_means: Vec<Vec<f64>>,
    pub class_std: f64,
    pub per_class_count: usize,
    pub outlier_count_per_class: usize,
    pub outlier_box_halfwidth: f64,
    pub rng_seed: u64,
}

impl SyntheticConfig {
    /// The bundled benchmark configuration: three diagonal class means,
    /// 100 inliers and 30 box outliers per class, labels 1/2/3.
    ///
    /// The inlier noise level is calibrated so that box outliers dominate
    /// the label noise; with it, path-based detection stays above 85%
    /// across outlier ratios from 10% to 150%.
    pub fn paper_fig1(seed: u64) -> Self {
        SyntheticConfig {
            class_means: vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]],
            class_std: 0.01,
            per_class_count: 100,
            outlier_count_per_class: 30,
            outlier_box_halfwidth: 0.5,
            rng_seed: seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_means.is_empty() {
            return Err(Error::InvalidConfig("no class means given".into()));
        }
        let p = self.class_means[0].len();
        if p == 0 {
            return Err(Error::InvalidConfig("class means are zero-dimensional".into()));
        }
        if self.class_means.iter().any(|m| m.len() != p) {
            return Err(Error::InvalidConfig(
                "class means have differing dimensions".into(),
            ));
        }
        if self
            .class_means
            .iter()
            .any(|m| m.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidConfig("class means must be finite".into()));
        }
        if !(self.class_std > 0.0) {
            return Err(Error::InvalidConfig("class_std must be positive".into()));
        }
        if self.per_class_count == 0 {
            return Err(Error::InvalidConfig(
                "per_class_count must be positive".into(),
            ));
        }
        if self.outlier_count_per_class > 0 && !(self.outlier_box_halfwidth > 0.0) {
            return Err(Error::InvalidConfig(
                "outlier_box_halfwidth must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Class means of equal norm spread evenly on a circle, starting at 90°.
/// Unlike collinear diagonal means these survive L2 normalization with the
/// class structure intact, which the diffusion graph needs.
pub fn equiangular_means(classes: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..classes)
        .map(|c| {
            let theta = (90.0 + 360.0 * c as f64 / classes as f64).to_radians();
            vec![radius * theta.cos(), radius * theta.sin()]
        })
        .collect()
}

/// Generates the box-outlier synthetic dataset.
///
/// Layout: all inliers first (grouped by class), then all outliers (grouped
/// by class). Same seed, same bytes.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Dataset> {
    cfg.validate()?;
    let classes = cfg.class_means.len();
    let p = cfg.class_means[0].len();
    let n = classes * (cfg.per_class_count + cfg.outlier_count_per_class);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let normal = Normal::new(0.0, cfg.class_std).expect("validated std");

    let mut features = Array2::zeros((n, p));
    let mut class_ids = Vec::with_capacity(n);
    let mut mask = vec![false; n];
    let mut row = 0;
    for (c, mean) in cfg.class_means.iter().enumerate() {
        for _ in 0..cfg.per_class_count {
            for (j, m) in mean.iter().enumerate() {
                features[[row, j]] = m + normal.sample(&mut rng);
            }
            class_ids.push(c);
            row += 1;
        }
    }
    if cfg.outlier_count_per_class > 0 {
        let h = cfg.outlier_box_halfwidth;
        let unif = Uniform::new_inclusive(-h, h);
        for (c, mean) in cfg.class_means.iter().enumerate() {
            for _ in 0..cfg.outlier_count_per_class {
                for (j, m) in mean.iter().enumerate() {
                    features[[row, j]] = m + unif.sample(&mut rng);
                }
                class_ids.push(c);
                mask[row] = true;
                row += 1;
            }
        }
    }
    debug_assert_eq!(row, n);

    let (labels, _) = encode_labels(&class_ids)?;
    Ok(Dataset {
        features,
        labels,
        class_ids: Some(class_ids),
        outlier_mask: Some(mask),
        instance_ids: (0..n as u64).collect(),
        seed: Some(cfg.rng_seed),
    })
}

/// Label-noise synthetic model: each corrupted instance keeps its class
/// label but its features are drawn at a different class's mean. This is
/// the scenario where outlier removal measurably improves a classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MislabelConfig {
    pub class_means: Vec<Vec<f64>>,
    pub class_std: f64,
    pub per_class_count: usize,
    pub mislabeled_per_class: usize,
    /// Magnitude multiplier on the wrong class's mean for corrupted
    /// features. 1.0 keeps them inside the wrong cluster; larger values
    /// model junk sources whose features lie outside every clean cluster
    /// and therefore carry leverage over a fitted model.
    pub mislabel_scale: f64,
    pub rng_seed: u64,
}

impl MislabelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.class_means.len() < 2 {
            return Err(Error::InvalidConfig(
                "mislabeling needs at least two classes".into(),
            ));
        }
        let p = self.class_means[0].len();
        if p == 0 || self.class_means.iter().any(|m| m.len() != p) {
            return Err(Error::InvalidConfig(
                "class means must share one positive dimension".into(),
            ));
        }
        if !(self.class_std > 0.0) {
            return Err(Error::InvalidConfig("class_std must be positive".into()));
        }
        if self.per_class_count == 0 {
            return Err(Error::InvalidConfig(
                "per_class_count must be positive".into(),
            ));
        }
        if !(self.mislabel_scale > 0.0 && self.mislabel_scale.is_finite()) {
            return Err(Error::InvalidConfig(
                "mislabel_scale must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Generates the mislabeled synthetic dataset. Clean instances first
/// (grouped by class), then mislabeled ones (grouped by claimed class);
/// the outlier mask is true exactly on the mislabeled instances.
pub fn generate_mislabeled(cfg: &MislabelConfig) -> Result<Dataset> {
    cfg.validate()?;
    let classes = cfg.class_means.len();
    let p = cfg.class_means[0].len();
    let n = classes * (cfg.per_class_count + cfg.mislabeled_per_class);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let normal = Normal::new(0.0, cfg.class_std).expect("validated std");

    let mut features = Array2::zeros((n, p));
    let mut class_ids = Vec::with_capacity(n);
    let mut mask = vec![false; n];
    let mut row = 0;
    for (c, mean) in cfg.class_means.iter().enumerate() {
        for _ in 0..cfg.per_class_count {
            for (j, m) in mean.iter().enumerate() {
                features[[row, j]] = m + normal.sample(&mut rng);
            }
            class_ids.push(c);
            row += 1;
        }
    }
    for c in 0..classes {
        for _ in 0..cfg.mislabeled_per_class {
            let offset = rng.gen_range(1..classes);
            let other = (c + offset) % classes;
            for (j, m) in cfg.class_means[other].iter().enumerate() {
                features[[row, j]] = cfg.mislabel_scale * m + normal.sample(&mut rng);
            }
            class_ids.push(c);
            mask[row] = true;
            row += 1;
        }
    }
    debug_assert_eq!(row, n);

    let (labels, _) = encode_labels(&class_ids)?;
    Ok(Dataset {
        features,
        labels,
        class_ids: Some(class_ids),
        outlier_mask: Some(mask),
        instance_ids: (0..n as u64).collect(),
        seed: Some(cfg.rng_seed),
    })
}

/// Stratified split: within each class the rows are shuffled by the seed
/// and `test_fraction` of them (rounded) go to the test set. Row order
/// within each side follows the original dataset order.
pub fn train_test_split(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction must be in [0, 1), got {test_fraction}"
        )));
    }
    ds.validate()?;
    let class_ids = ds.resolve_class_ids();
    let classes: std::collections::BTreeSet<usize> = class_ids.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; ds.n()];
    for c in classes {
        let mut rows: Vec<usize> = (0..ds.n()).filter(|&i| class_ids[i] == c).collect();
        // Fisher-Yates, seeded.
        for i in (1..rows.len()).rev() {
            let j = rng.gen_range(0..=i);
            rows.swap(i, j);
        }
        let n_test = (test_fraction * rows.len() as f64).round() as usize;
        for &r in rows.iter().take(n_test) {
            is_test[r] = true;
        }
    }
    let train_rows: Vec<usize> = (0..ds.n()).filter(|&i| !is_test[i]).collect();
    let test_rows: Vec<usize> = (0..ds.n()).filter(|&i| is_test[i]).collect();
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(Error::InvalidConfig(
            "split produced an empty train or test side".into(),
        ));
    }
    Ok((ds.subset(&train_rows), ds.subset(&test_rows)))
}
