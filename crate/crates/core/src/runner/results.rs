use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::BASELINE;
use crate::compare::{SddResult, ViTestResult};
use crate::error::{Error, Result};
use crate::explain::ProfileKind;

/// Everything computed for one (dataset, method, model) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCellResult {
    pub dataset: String,
    pub method: String,
    pub model: String,
    pub ba_base: f64,
    pub ba_balanced: f64,
    /// `ba_balanced - ba_base`.
    pub gain: f64,
    pub asdd_pdp: f64,
    pub asdd_ale: f64,
    pub sdd: Vec<SddResult>,
    pub vi_test: Option<ViTestResult>,
    pub failed: bool,
    pub warnings: Vec<String>,
    /// Seconds spent per stage.
    pub timings: BTreeMap<String, f64>,
}

impl GridCellResult {
    pub fn failed(dataset: &str, method: &str, model: &str, warnings: Vec<String>) -> Self {
        Self {
            dataset: dataset.into(),
            method: method.into(),
            model: model.into(),
            ba_base: f64::NAN,
            ba_balanced: f64::NAN,
            gain: f64::NAN,
            asdd_pdp: f64::NAN,
            asdd_ale: f64::NAN,
            sdd: Vec::new(),
            vi_test: None,
            failed: true,
            warnings,
            timings: BTreeMap::new(),
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.method == BASELINE
    }

    pub fn row(&self) -> ResultRow {
        let value = |v: f64| (!self.failed).then_some(v);
        ResultRow {
            dataset: self.dataset.clone(),
            model: self.model.clone(),
            method: self.method.clone(),
            asdd_pdp: value(self.asdd_pdp),
            asdd_ale: value(self.asdd_ale),
            ba_base: value(self.ba_base),
            ba_balanced: value(self.ba_balanced),
            vi_p: self.vi_test.as_ref().map(|t| t.p_value),
            vi_p_adjusted: self.vi_test.as_ref().map(|t| t.adjusted_p),
            vi_rejected: self.vi_test.as_ref().map(|t| t.rejected),
            gain: value(self.gain),
            failed: self.failed,
            warnings: self.warnings.clone(),
        }
    }
}

/// One line of the results CSV. Failed cells leave numbers empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub model: String,
    pub method: String,
    pub asdd_pdp: Option<f64>,
    pub asdd_ale: Option<f64>,
    pub ba_base: Option<f64>,
    pub ba_balanced: Option<f64>,
    pub vi_p: Option<f64>,
    pub vi_p_adjusted: Option<f64>,
    pub vi_rejected: Option<bool>,
    pub gain: Option<f64>,
    pub failed: bool,
    pub warnings: Vec<String>,
}

pub const RESULTS_HEADER: [&str; 13] = [
    "dataset",
    "model",
    "method",
    "asdd_pdp",
    "asdd_ale",
    "ba_base",
    "ba_balanced",
    "vi_p",
    "vi_p_adjusted",
    "vi_rejected",
    "gain",
    "failed",
    "warnings",
];

pub const COMPARISON_HEADER: [&str; 6] = ["dataset", "model", "method", "kind", "variable", "sdd"];

const WARNING_SEPARATOR: &str = " | ";

fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn results_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.model.clone(),
            r.method.clone(),
            num(r.asdd_pdp),
            num(r.asdd_ale),
            num(r.ba_base),
            num(r.ba_balanced),
            num(r.vi_p),
            num(r.vi_p_adjusted),
            r.vi_rejected.map(|b| b.to_string()).unwrap_or_default(),
            num(r.gain),
            r.failed.to_string(),
            r.warnings.join(WARNING_SEPARATOR),
        ])?;
    }
    into_string(w)
}

pub fn comparison_to_csv(cells: &[GridCellResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COMPARISON_HEADER)?;
    for c in cells.iter().filter(|c| !c.failed) {
        for s in &c.sdd {
            w.write_record([
                c.dataset.as_str(),
                &c.model,
                &c.method,
                s.kind.as_str(),
                &s.variable,
                &s.sdd.to_string(),
            ])?;
        }
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidData(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_results_csv(&text)
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let cols: Vec<usize> = RESULTS_HEADER.iter().map(|h| index(h)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |k: usize| record.get(cols[k]).unwrap_or("");
        let cell_err = |k: usize| Error::Cell {
            row: line + 1,
            column: RESULTS_HEADER[k].to_string(),
            value: field(k).to_string(),
        };
        let number = |k: usize| -> Result<Option<f64>> {
            let s = field(k);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| cell_err(k))
        };
        let flag = |k: usize| -> Result<Option<bool>> {
            match field(k) {
                "" => Ok(None),
                "true" => Ok(Some(true)),
                "false" => Ok(Some(false)),
                _ => Err(cell_err(k)),
            }
        };
        let warnings = field(12);
        rows.push(ResultRow {
            dataset: field(0).to_string(),
            model: field(1).to_string(),
            method: field(2).to_string(),
            asdd_pdp: number(3)?,
            asdd_ale: number(4)?,
            ba_base: number(5)?,
            ba_balanced: number(6)?,
            vi_p: number(7)?,
            vi_p_adjusted: number(8)?,
            vi_rejected: flag(9)?,
            gain: number(10)?,
            failed: flag(11)?.ok_or_else(|| cell_err(11))?,
            warnings: if warnings.is_empty() {
                Vec::new()
            } else {
                warnings.split(WARNING_SEPARATOR).map(str::to_string).collect()
            },
        });
    }
    Ok(rows)
}

/// One point of the performance gain plot.
#[derive(Debug, Clone, PartialEq)]
pub struct GainRow {
    pub dataset: String,
    pub model: String,
    pub method: String,
    pub gain: f64,
    pub asdd: f64,
}

/// Non-baseline, non-failed cells as (gain, ASDD) points for one profile
/// kind.
pub fn performance_gain_table(rows: &[ResultRow], kind: ProfileKind) -> Vec<GainRow> {
    rows.iter()
        .filter(|r| !r.failed && r.method != BASELINE)
        .filter_map(|r| {
            let asdd = match kind {
                ProfileKind::Pdp => r.asdd_pdp,
                ProfileKind::Ale => r.asdd_ale,
            }?;
            Some(GainRow {
                dataset: r.dataset.clone(),
                model: r.model.clone(),
                method: r.method.clone(),
                gain: r.gain?,
                asdd,
            })
        })
        .collect()
}
