//! Layered runtime configuration for the command-line tools.
//!
//! Resolution order: built-in defaults, then a flat `key = value` config
//! file, then individual flag overrides. The fully resolved configuration
//! is embedded into every output artifact (as `# key = value` comment
//! lines in CSV files and as an object in JSON files) so any artifact can
//! be reproduced from its own header.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// All tunable knobs with their built-in defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Neighbour count for the similarity graph.
    pub k_neighbors: usize,
    /// Restart probability of the lazy random walks.
    pub p_r: f64,
    /// Convergence tolerance of the iterative walk.
    pub tol: f64,
    /// Embedding dimension.
    pub d: usize,
    /// Gradient tolerance of the embedding fit.
    pub grad_tol: f64,
    /// Path termination: stop at lambda_max times this ratio.
    pub lambda_min_ratio: f64,
    /// Cross-validation fold count.
    pub folds: usize,
    /// Classifier regularization constant.
    pub reg_c: f64,
    /// Classifier training epochs.
    pub epochs: usize,
    /// Primary seed: dataset generation, splits, embedding init.
    pub seed: u64,
    /// Seed list for repeated pipeline benchmark runs.
    pub seeds: Vec<u64>,
    /// Repeats per cell in the ratio sweep.
    pub repeats: usize,
    /// Outlier-to-inlier ratios for the sweep.
    pub ratios: Vec<f64>,
    /// Held-out fraction for pipeline splits.
    pub test_fraction: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            k_neighbors: 20,
            p_r: 0.5,
            tol: 1e-10,
            d: 8,
            grad_tol: 1e-6,
            lambda_min_ratio: 1e-6,
            folds: 5,
            reg_c: 1.0,
            epochs: 100,
            seed: 0,
            seeds: (1..=10).collect(),
            repeats: 10,
            ratios: vec![0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5],
            test_fraction: 0.3,
        }
    }
}

fn parse_scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| {
        Error::InvalidConfig(format!("bad value '{value}' for key '{key}'"))
    })
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(Error::InvalidConfig(format!("empty list for key '{key}'")));
    }
    items
        .into_iter()
        .map(|s| {
            s.parse().map_err(|_| {
                Error::InvalidConfig(format!("bad list item '{s}' for key '{key}'"))
            })
        })
        .collect()
}

impl Config {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "k_neighbors" => self.k_neighbors = parse_scalar(key, value)?,
            "p_r" => self.p_r = parse_scalar(key, value)?,
            "tol" => self.tol = parse_scalar(key, value)?,
            "d" => self.d = parse_scalar(key, value)?,
            "grad_tol" => self.grad_tol = parse_scalar(key, value)?,
            "lambda_min_ratio" => self.lambda_min_ratio = parse_scalar(key, value)?,
            "folds" => self.folds = parse_scalar(key, value)?,
            "reg_c" => self.reg_c = parse_scalar(key, value)?,
            "epochs" => self.epochs = parse_scalar(key, value)?,
            "seed" => self.seed = parse_scalar(key, value)?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "repeats" => self.repeats = parse_scalar(key, value)?,
            "ratios" => self.ratios = parse_list(key, value)?,
            "test_fraction" => self.test_fraction = parse_scalar(key, value)?,
            other => {
                return Err(Error::InvalidConfig(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }

    /// Applies a flat config file: one `key = value` per line, `#` comments
    /// and blank lines ignored.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "config line {} is not 'key = value': '{line}'",
                    idx + 1
                ))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Resolved key/value view, in stable key order. Feeding every pair
    /// back through [`Config::set`] reproduces the config exactly.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut m = BTreeMap::new();
        m.insert("k_neighbors".into(), self.k_neighbors.to_string());
        m.insert("p_r".into(), self.p_r.to_string());
        m.insert("tol".into(), self.tol.to_string());
        m.insert("d".into(), self.d.to_string());
        m.insert("grad_tol".into(), self.grad_tol.to_string());
        m.insert(
            "lambda_min_ratio".into(),
            self.lambda_min_ratio.to_string(),
        );
        m.insert("folds".into(), self.folds.to_string());
        m.insert("reg_c".into(), self.reg_c.to_string());
        m.insert("epochs".into(), self.epochs.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert(
            "seeds".into(),
            self.seeds
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        m.insert("repeats".into(), self.repeats.to_string());
        m.insert("ratios".into(), join(&self.ratios));
        m.insert("test_fraction".into(), self.test_fraction.to_string());
        m
    }

    /// `# key = value` lines for embedding into CSV artifacts.
    pub fn comment_block(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.snapshot() {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_sane() {
        let c = Config::default();
        assert_eq!(c.k_neighbors, 20);
        assert_eq!(c.folds, 5);
        assert_eq!(c.ratios.len(), 7);
        assert_eq!(c.seeds.len(), 10);
    }

    #[test]
    fn file_overrides_defaults_and_flags_override_file() {
        let mut c = Config::default();
        c.apply_file_text("k_neighbors = 7\n# comment\n\nfolds=3\nratios = 0.5, 1.0\n")
            .unwrap();
        assert_eq!(c.k_neighbors, 7);
        assert_eq!(c.folds, 3);
        assert_eq!(c.ratios, vec![0.5, 1.0]);
        // A later set() call (flag layer) wins.
        c.set("k_neighbors", "9").unwrap();
        assert_eq!(c.k_neighbors, 9);
        // Untouched keys keep their defaults.
        assert_eq!(c.p_r, 0.5);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let mut c = Config::default();
        match c.set("k_neighbours", "5") {
            Err(Error::InvalidConfig(msg)) => assert!(msg.contains("unknown")),
            other => panic!("expected config error, got {other:?}"),
        }
        assert!(c.set("folds", "three").is_err());
        assert!(c.apply_file_text("just words\n").is_err());
        assert!(c.set("seeds", "  ").is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let mut c = Config::default();
        c.set("p_r", "0.75").unwrap();
        c.set("seeds", "3 5 8").unwrap();
        c.set("tol", "0.00000000001").unwrap();
        let snap = c.snapshot();
        let mut rebuilt = Config::default();
        for (k, v) in &snap {
            rebuilt.set(k, v).unwrap();
        }
        assert_eq!(c, rebuilt);
    }

    #[test]
    fn comment_block_is_reparseable() {
        let c = Config::default();
        let block = c.comment_block();
        assert!(block.lines().all(|l| l.starts_with("# ")));
        let mut rebuilt = Config::default();
        // Strip the comment marker and feed back through the file parser.
        let text: String = block.lines().map(|l| format!("{}\n", &l[2..])).collect();
        rebuilt.apply_file_text(&text).unwrap();
        assert_eq!(c, rebuilt);
    }
}
