//! OpenML download client with an on-disk cache.
//!
//! Layout: `<cache_dir>/<openml_id>/data.csv` plus `meta.json`. A dataset is
//! cached only after it passes the registry cross-check, so a cache hit can
//! be trusted without network access.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::Duration;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::csv_io::{map_labels, parse_csv, to_csv_string};
use super::dataset::{Dataset, Source};
use super::registry::RegistryEntry;
use crate::error::{Error, Result};

pub const OPENML_API: &str = "https://www.openml.org/api/v1/json/data";
pub const OPENML_DOWNLOAD: &str = "https://www.openml.org/data/v1/download";

/// Minimal HTTP GET abstraction so the client can be exercised offline.
pub trait HttpGet {
    fn get_text(&self, url: &str) -> Result<String>;
}

pub struct UreqClient {
    agent: ureq::Agent,
}

impl Default for UreqClient {
    fn default() -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        Self {
            agent: config.into(),
        }
    }
}

impl HttpGet for UreqClient {
    fn get_text(&self, url: &str) -> Result<String> {
        self.agent
            .get(url)
            .call()
            .map_err(|e| Error::Network(format!("{url}: {e}")))?
            .body_mut()
            .with_config()
            .limit(512 * 1024 * 1024)
            .read_to_string()
            .map_err(|e| Error::Network(format!("{url}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheMeta {
    name: String,
    openml_id: u32,
    target_column: String,
    expected_ir: f64,
    expected_rows: usize,
    expected_cols: usize,
    observed_ir: f64,
}

pub fn fetch_openml(entry: &RegistryEntry, cache_dir: impl AsRef<Path>) -> Result<Dataset> {
    fetch_openml_with(entry, cache_dir, &UreqClient::default())
}

pub fn fetch_openml_with(
    entry: &RegistryEntry,
    cache_dir: impl AsRef<Path>,
    http: &dyn HttpGet,
) -> Result<Dataset> {
    let id = entry.openml_id.ok_or_else(|| {
        Error::InvalidArgument(format!("'{}' has no OpenML id", entry.name))
    })?;
    let dir = cache_dir.as_ref().join(id.to_string());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let lock_path = dir.join(".lock");
    let lock = File::create(&lock_path).map_err(|e| Error::io(&lock_path, e))?;
    lock.lock().map_err(|e| Error::io(&lock_path, e))?;

    if let Some(d) = read_cache(&dir, entry)? {
        return Ok(d);
    }

    let (d, target) = download(id, &entry.name, http)?;
    entry.cross_check(&d.summarize())?;
    write_cache(&dir, entry, id, &target, &d)?;
    Ok(d)
}

fn read_cache(dir: &Path, entry: &RegistryEntry) -> Result<Option<Dataset>> {
    let meta_path = dir.join("meta.json");
    let data_path = dir.join("data.csv");
    if !meta_path.exists() || !data_path.exists() {
        return Ok(None);
    }
    let meta: CacheMeta = serde_json::from_str(
        &fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?,
    )?;
    let text = fs::read_to_string(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let (d, _) = parse_csv(&text, &entry.name, &meta.target_column, Source::Openml)?;
    entry.cross_check(&d.summarize())?;
    Ok(Some(d))
}

fn write_cache(dir: &Path, entry: &RegistryEntry, id: u32, target: &str, d: &Dataset) -> Result<()> {
    let meta = CacheMeta {
        name: entry.name.clone(),
        openml_id: id,
        target_column: target.to_string(),
        expected_ir: entry.expected_ir,
        expected_rows: entry.expected_rows,
        expected_cols: entry.expected_cols,
        observed_ir: d.summarize().imbalance_ratio,
    };
    write_atomic(&dir.join("data.csv"), &to_csv_string(d, target, None)?)?;
    write_atomic(&dir.join("meta.json"), &serde_json::to_string_pretty(&meta)?)
}

fn write_atomic(path: &PathBuf, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Deserialize)]
struct DescriptionEnvelope {
    data_set_description: Description,
}

#[derive(Deserialize)]
struct Description {
    file_id: serde_json::Value,
    default_target_attribute: Option<String>,
    row_id_attribute: Option<String>,
    #[serde(default)]
    ignore_attribute: Option<serde_json::Value>,
}

fn download(id: u32, name: &str, http: &dyn HttpGet) -> Result<(Dataset, String)> {
    let desc_text = http.get_text(&format!("{OPENML_API}/{id}"))?;
    let desc: DescriptionEnvelope = serde_json::from_str(&desc_text)?;
    let desc = desc.data_set_description;
    let file_id = match &desc.file_id {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Number(n) => n.to_string(),
        other => return Err(Error::Network(format!("unexpected file_id {other}"))),
    };
    let target = desc
        .default_target_attribute
        .ok_or_else(|| Error::Network(format!("dataset {id} has no default target")))?;
    let mut skip: Vec<String> = desc.row_id_attribute.into_iter().collect();
    match desc.ignore_attribute {
        Some(serde_json::Value::String(s)) => skip.push(s),
        Some(serde_json::Value::Array(items)) => {
            skip.extend(items.iter().filter_map(|v| v.as_str().map(str::to_string)))
        }
        _ => {}
    }
    let arff = http.get_text(&format!("{OPENML_DOWNLOAD}/{file_id}"))?;
    let d = parse_arff(&arff, name, &target, &skip)?;
    Ok((d, target))
}

#[derive(Debug, Clone, PartialEq)]
enum AttrKind {
    Numeric,
    Nominal,
    Other,
}

/// Parse a dense ARFF document. Keeps numeric attributes other than the
/// target and `skip`; rows with a missing value (`?`) in a kept column or
/// the target are dropped.
pub fn parse_arff(text: &str, name: &str, target: &str, skip: &[String]) -> Result<Dataset> {
    let mut attrs: Vec<(String, AttrKind)> = Vec::new();
    let mut lines = text.lines();
    for line in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@attribute") {
            attrs.push(parse_attribute(&line["@attribute".len()..])?);
        } else if lower.starts_with("@data") {
            break;
        }
    }
    let target_idx = attrs
        .iter()
        .position(|(n, _)| n == target)
        .ok_or_else(|| Error::MissingColumn(target.to_string()))?;
    let keep: Vec<usize> = attrs
        .iter()
        .enumerate()
        .filter(|(i, (n, k))| *i != target_idx && *k == AttrKind::Numeric && !skip.contains(n))
        .map(|(i, _)| i)
        .collect();

    let body: String = lines
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('%'))
        .map(|l| format!("{l}\n"))
        .collect();
    if body.starts_with('{') {
        return Err(Error::InvalidData("sparse ARFF is not supported".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .quote(b'\'')
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());

    let mut values = Vec::new();
    let mut labels = Vec::new();
    'rows: for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != attrs.len() {
            return Err(Error::InvalidData(format!(
                "ARFF row {} has {} fields, expected {}",
                row + 1,
                record.len(),
                attrs.len()
            )));
        }
        let label = record[target_idx].trim_matches('"');
        if label == "?" {
            continue;
        }
        let mut parsed = Vec::with_capacity(keep.len());
        for &c in &keep {
            let cell = record[c].trim_matches('"');
            if cell == "?" {
                continue 'rows;
            }
            parsed.push(cell.parse::<f64>().map_err(|_| Error::Cell {
                row: row + 1,
                column: attrs[c].0.clone(),
                value: cell.to_string(),
            })?);
        }
        values.extend(parsed);
        labels.push(label.to_string());
    }
    let (y, _) = map_labels(&labels)?;
    let x = Array2::from_shape_vec((labels.len(), keep.len()), values)
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    let names = keep.iter().map(|&c| attrs[c].0.clone()).collect();
    Dataset::new(name, x, names, y, Source::Openml)
}

fn parse_attribute(rest: &str) -> Result<(String, AttrKind)> {
    let rest = rest.trim();
    let (name, tail) = match rest.chars().next() {
        Some(q @ ('\'' | '"')) => {
            let end = rest[1..]
                .find(q)
                .ok_or_else(|| Error::InvalidData(format!("bad attribute line: {rest}")))?;
            (rest[1..=end].to_string(), &rest[end + 2..])
        }
        _ => {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            (rest[..end].to_string(), &rest[end..])
        }
    };
    let tail = tail.trim();
    let kind = if tail.starts_with('{') {
        AttrKind::Nominal
    } else {
        match tail.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => AttrKind::Numeric,
            _ => AttrKind::Other,
        }
    };
    Ok((name, kind))
}
