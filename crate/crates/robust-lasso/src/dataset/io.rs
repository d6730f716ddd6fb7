//! Dataset file I/O.
//!
//! CSV: header `id,f1,...,fp,label[,outlier]`, optional leading `# key = value`
//! comment lines for metadata (currently `seed`). JSON: object with `features`,
//! `labels`, optional `outlier_mask`, and `meta.seed`.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces every value bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    Json,
}

impl FileFormat {
    /// Picks the format from the file extension (case-insensitive);
    /// anything that is not `.json` is treated as CSV.
    pub fn infer(path: &Path) -> FileFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => FileFormat::Json,
            _ => FileFormat::Csv,
        }
    }
}

impl std::str::FromStr for FileFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(FileFormat::Csv),
            "json" => Ok(FileFormat::Json),
            other => Err(Error::InvalidConfig(format!(
                "unknown format '{other}', expected csv or json"
            ))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct JsonDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outlier_mask: Option<Vec<bool>>,
    #[serde(default)]
    meta: Option<JsonMeta>,
}

/// Renders the dataset as CSV text.
pub fn to_csv_string(ds: &Dataset) -> String {
    let mut out = String::new();
    if let Some(seed) = ds.seed {
        let _ = writeln!(out, "# seed = {seed}");
    }
    let p = ds.p();
    out.push_str("id");
    for j in 1..=p {
        let _ = write!(out, ",f{j}");
    }
    out.push_str(",label");
    let with_mask = ds.outlier_mask.is_some();
    if with_mask {
        out.push_str(",outlier");
    }
    out.push('\n');
    for i in 0..ds.n() {
        let _ = write!(out, "{}", ds.instance_ids[i]);
        for v in ds.features.row(i) {
            let _ = write!(out, ",{v}");
        }
        let _ = write!(out, ",{}", ds.labels[i]);
        if with_mask {
            let flag = ds.outlier_mask.as_ref().unwrap()[i];
            let _ = write!(out, ",{}", if flag { 1 } else { 0 });
        }
        out.push('\n');
    }
    out
}

/// Parses CSV text produced by [`to_csv_string`] or hand-written files with
/// the same header shape. Line numbers in errors are 1-based over the whole
/// file, comments and header included.
pub fn from_csv_string(text: &str) -> Result<Dataset> {
    let mut seed = None;
    let mut header: Option<(usize, bool)> = None; // (p, has_mask)
    let mut ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut mask = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                if k.trim() == "seed" {
                    seed = v.trim().parse::<u64>().ok();
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match header {
            None => {
                if fields.first() != Some(&"id") {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "header must start with 'id'".into(),
                    });
                }
                let has_mask = fields.last() == Some(&"outlier");
                let label_pos = if has_mask {
                    fields.len().checked_sub(2)
                } else {
                    fields.len().checked_sub(1)
                };
                let ok = label_pos
                    .map(|pos| fields.get(pos) == Some(&"label"))
                    .unwrap_or(false);
                if !ok {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "missing label column".into(),
                    });
                }
                let p = fields.len() - 2 - usize::from(has_mask);
                header = Some((p, has_mask));
            }
            Some((p, has_mask)) => {
                let expect = p + 2 + usize::from(has_mask);
                if fields.len() != expect {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("expected {expect} fields, got {}", fields.len()),
                    });
                }
                let id: u64 = fields[0].parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad instance id '{}'", fields[0]),
                })?;
                let mut row = Vec::with_capacity(p);
                for (j, cell) in fields[1..1 + p].iter().enumerate() {
                    let v: f64 = cell.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        msg: format!("non-numeric cell '{cell}' in column f{}", j + 1),
                    })?;
                    row.push(v);
                }
                let label: f64 = fields[1 + p].parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("non-numeric label '{}'", fields[1 + p]),
                })?;
                if has_mask {
                    let m = match fields[2 + p] {
                        "0" | "false" => false,
                        "1" | "true" => true,
                        other => {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: format!("bad outlier flag '{other}'"),
                            })
                        }
                    };
                    mask.push(m);
                }
                ids.push(id);
                rows.push(row);
                labels.push(label);
            }
        }
    }

    let (p, has_mask) = header.ok_or_else(|| Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    if rows.is_empty() {
        return Err(Error::InvalidInput("dataset has no instances".into()));
    }
    let n = rows.len();
    let mut features = Array2::zeros((n, p));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            features[[i, j]] = v;
        }
    }
    let ds = Dataset {
        features,
        labels: Array1::from(labels),
        class_ids: None,
        outlier_mask: has_mask.then_some(mask),
        instance_ids: ids,
        seed,
    };
    ds.validate()?;
    Ok(ds)
}

/// Renders the dataset as pretty JSON text.
pub fn to_json_string(ds: &Dataset) -> Result<String> {
    let doc = JsonDataset {
        features: ds.features.outer_iter().map(|r| r.to_vec()).collect(),
        labels: ds.labels.to_vec(),
        outlier_mask: ds.outlier_mask.clone(),
        meta: Some(JsonMeta { seed: ds.seed }),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json_string(text: &str) -> Result<Dataset> {
    let doc: JsonDataset = serde_json::from_str(text)?;
    let n = doc.features.len();
    if n == 0 {
        return Err(Error::InvalidInput("dataset has no instances".into()));
    }
    let p = doc.features[0].len();
    if let Some(bad) = doc.features.iter().position(|r| r.len() != p) {
        return Err(Error::ShapeMismatch {
            what: "feature row",
            expected: format!("{p} columns"),
            got: format!("{} columns in row {bad}", doc.features[bad].len()),
        });
    }
    let mut features = Array2::zeros((n, p));
    for (i, row) in doc.features.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            features[[i, j]] = v;
        }
    }
    let ds = Dataset {
        features,
        labels: Array1::from(doc.labels),
        class_ids: None,
        outlier_mask: doc.outlier_mask,
        instance_ids: (0..n as u64).collect(),
        seed: doc.meta.and_then(|m| m.seed),
    };
    ds.validate()?;
    Ok(ds)
}

pub fn save_dataset(ds: &Dataset, path: &Path, format: FileFormat) -> Result<()> {
    ds.validate()?;
    let text = match format {
        FileFormat::Csv => to_csv_string(ds),
        FileFormat::Json => to_json_string(ds)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_dataset(path: &Path, format: FileFormat) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    match format {
        FileFormat::Csv => from_csv_string(&text),
        FileFormat::Json => from_json_string(&text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticConfig};

    fn sample() -> Dataset {
        generate_synthetic(&SyntheticConfig::paper_fig1(7)).unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = sample();
        let back = from_csv_string(&to_csv_string(&ds)).unwrap();
        assert_eq!(back.features, ds.features);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.outlier_mask, ds.outlier_mask);
        assert_eq!(back.instance_ids, ds.instance_ids);
        assert_eq!(back.seed, Some(7));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let ds = sample();
        let back = from_json_string(&to_json_string(&ds).unwrap()).unwrap();
        assert_eq!(back.features, ds.features);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.outlier_mask, ds.outlier_mask);
        assert_eq!(back.seed, Some(7));
    }

    #[test]
    fn csv_shape_contract() {
        let text = "id,f1,f2,label\n0,1.5,2.5,1\n1,0.5,0.25,2\n2,3,3,3\n";
        let ds = from_csv_string(text).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.p(), 2);
        assert!(ds.outlier_mask.is_none());
        assert_eq!(ds.labels.to_vec(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn csv_nan_rejected() {
        let text = "id,f1,f2,label\n0,1.0,NaN,1\n";
        let err = from_csv_string(text).unwrap_err();
        assert_eq!(err.to_string(), "non-finite value at (0,1)");
    }

    #[test]
    fn csv_ragged_row_rejected() {
        let text = "id,f1,f2,label\n0,1.0,1\n";
        let err = from_csv_string(text).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn csv_missing_label_rejected() {
        let text = "id,f1,f2\n0,1.0,2.0\n";
        let err = from_csv_string(text).unwrap_err();
        assert!(err.to_string().contains("missing label column"), "{err}");
    }

    #[test]
    fn csv_non_numeric_cell_rejected() {
        let text = "id,f1,f2,label\n0,1.0,abc,1\n";
        let err = from_csv_string(text).unwrap_err();
        assert!(err.to_string().contains("non-numeric cell"), "{err}");
    }

    #[test]
    fn json_ragged_rejected() {
        let text = r#"{"features": [[1.0, 2.0], [1.0]], "labels": [1.0, 2.0]}"#;
        assert!(from_json_string(text).is_err());
    }

    #[test]
    fn format_inference() {
        assert_eq!(FileFormat::infer(Path::new("a/b.JSON")), FileFormat::Json);
        assert_eq!(FileFormat::infer(Path::new("a/b.csv")), FileFormat::Csv);
        assert_eq!(FileFormat::infer(Path::new("a/b")), FileFormat::Csv);
        assert!("yaml".parse::<FileFormat>().is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("rl_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let ds = sample();
        for (name, fmt) in [("d.csv", FileFormat::Csv), ("d.json", FileFormat::Json)] {
            let path = dir.join(name);
            save_dataset(&ds, &path, fmt).unwrap();
            let back = load_dataset(&path, fmt).unwrap();
            assert_eq!(back.features, ds.features);
        }
    }

    #[test]
    fn shortest_roundtrip_floats_survive() {
        // An awkward float with a long decimal expansion.
        let mut ds = sample();
        ds.features[[0, 0]] = 0.1 + 0.2;
        ds.features[[0, 1]] = f64::MIN_POSITIVE;
        let back = from_csv_string(&to_csv_string(&ds)).unwrap();
        assert_eq!(back.features[[0, 0]], 0.1 + 0.2);
        assert_eq!(back.features[[0, 1]], f64::MIN_POSITIVE);
    }
}
