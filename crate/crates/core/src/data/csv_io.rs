use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::dataset::{Dataset, Source};
use crate::error::{Error, Result};

/// Column written by balancing output to flag synthesized rows; skipped on load.
pub const SYNTHETIC_COLUMN: &str = "__synthetic";

/// How raw target labels were mapped onto {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetMapping {
    pub negative: String,
    pub positive: String,
}

/// Load a headered, comma-separated file. The dataset is named after the
/// file stem.
///
/// Target labels that are exactly `0`/`1` are kept. Any other pair of labels
/// is mapped minority → 1; on equal class sizes the larger label (numeric
/// order if both parse as numbers, otherwise lexicographic) becomes 1.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<Dataset> {
    load_csv_with_mapping(path, target_column).map(|(d, _)| d)
}

pub fn load_csv_with_mapping(
    path: impl AsRef<Path>,
    target_column: &str,
) -> Result<(Dataset, TargetMapping)> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_csv(&text, &name, target_column, Source::Csv)
}

pub(crate) fn parse_csv(
    text: &str,
    name: &str,
    target_column: &str,
    source: Source,
) -> Result<(Dataset, TargetMapping)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingColumn(target_column.to_string()))?;
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&c| c != target_idx && header[c] != SYNTHETIC_COLUMN)
        .collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n_rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for &c in &feature_cols {
            let cell = record.get(c).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::Cell {
                row: row + 1,
                column: header[c].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::Cell {
                    row: row + 1,
                    column: header[c].clone(),
                    value: cell.to_string(),
                });
            }
            values.push(v);
        }
        let label = record.get(target_idx).unwrap_or("");
        if label.is_empty() {
            return Err(Error::Cell {
                row: row + 1,
                column: target_column.to_string(),
                value: String::new(),
            });
        }
        labels.push(label.to_string());
        n_rows += 1;
    }

    let (target, mapping) = map_labels(&labels)?;
    let features = Array2::from_shape_vec((n_rows, feature_cols.len()), values)
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    let names = feature_cols.iter().map(|&c| header[c].clone()).collect();
    let d = Dataset::new(name, features, names, target, source)?;
    Ok((d, mapping))
}

pub(crate) fn map_labels(labels: &[String]) -> Result<(Vec<u8>, TargetMapping)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l.as_str()).or_default() += 1;
    }
    match counts.len() {
        0 => return Err(Error::TooFewRows("no data rows".into())),
        1 => return Err(Error::SingleClass(labels[0].clone())),
        2 => {}
        k => return Err(Error::InvalidData(format!("target has {k} distinct labels"))),
    }
    let keys: Vec<&str> = counts.keys().copied().collect();
    let as_num: Vec<Option<f64>> = keys.iter().map(|k| k.parse::<f64>().ok()).collect();

    let positive = if as_num == [Some(0.0), Some(1.0)] || as_num == [Some(1.0), Some(0.0)] {
        if as_num[0] == Some(1.0) {
            keys[0]
        } else {
            keys[1]
        }
    } else {
        let (a, b) = (keys[0], keys[1]);
        match counts[a].cmp(&counts[b]) {
            std::cmp::Ordering::Less => a,
            std::cmp::Ordering::Greater => b,
            std::cmp::Ordering::Equal => match (as_num[0], as_num[1]) {
                (Some(x), Some(y)) => {
                    if x > y {
                        a
                    } else {
                        b
                    }
                }
                // BTreeMap keys are sorted, so b is the lexicographically larger.
                _ => b,
            },
        }
    };
    let negative = if positive == keys[0] { keys[1] } else { keys[0] };
    let target = labels.iter().map(|l| u8::from(l == positive)).collect();
    Ok((
        target,
        TargetMapping {
            negative: negative.to_string(),
            positive: positive.to_string(),
        },
    ))
}

/// Write features then the target (as 0/1) under `target_column`. When
/// `synthetic` is given, an extra `__synthetic` 0/1 column is appended.
pub fn write_csv(
    d: &Dataset,
    path: impl AsRef<Path>,
    target_column: &str,
    synthetic: Option<&[bool]>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = File::create(path).map_err(|e| Error::io(path, e))?;
    let text = to_csv_string(d, target_column, synthetic)?;
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn to_csv_string(d: &Dataset, target_column: &str, synthetic: Option<&[bool]>) -> Result<String> {
    if let Some(mask) = synthetic {
        if mask.len() != d.n_rows() {
            return Err(Error::InvalidArgument(
                "synthetic mask length differs from row count".into(),
            ));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = d.feature_names().iter().map(String::as_str).collect();
    header.push(target_column);
    if synthetic.is_some() {
        header.push(SYNTHETIC_COLUMN);
    }
    w.write_record(&header)?;
    let x = d.features();
    let mut record = Vec::with_capacity(header.len());
    for (i, row) in x.outer_iter().enumerate() {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        record.push(d.target()[i].to_string());
        if let Some(mask) = synthetic {
            record.push(u8::from(mask[i]).to_string());
        }
        w.write_record(&record)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidData(e.to_string()))
}
