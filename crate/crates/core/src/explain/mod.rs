//! Model-agnostic explanations over a fixed background dataset: partial
//! dependence, accumulated local effects, and permutation importance.

mod ale;
mod grid;
mod importance;
mod pdp;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use ale::{ale, DEFAULT_ALE_BINS};
pub use grid::{make_grid, Grid, GridConstruction, DEFAULT_GRID_POINTS};
pub use importance::{auc, permutation_importance, DEFAULT_VI_REPEATS};
pub use pdp::pdp;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::Predictor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Pdp,
    Ale,
}

impl ProfileKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileKind::Pdp => "pdp",
            ProfileKind::Ale => "ale",
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pdp" => Ok(ProfileKind::Pdp),
            "ale" => Ok(ProfileKind::Ale),
            _ => Err(Error::InvalidArgument(format!("unknown profile kind `{s}`"))),
        }
    }
}

/// One explanation curve: `values[t]` belongs to `grid.points[t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub kind: ProfileKind,
    pub variable: String,
    pub grid: Grid,
    pub values: Vec<f64>,
    pub model_id: String,
    pub background_id: String,
    pub warnings: Vec<String>,
}

/// Per-variable permutation importance with its raw repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector {
    pub model_id: String,
    pub variables: Vec<String>,
    /// Column means of `raw`, in `variables` order.
    pub mean: Vec<f64>,
    /// Loss increases, one row per repeat and one column per variable.
    pub raw: Array2<f64>,
}

impl ImportanceVector {
    pub fn repeats(&self) -> usize {
        self.raw.nrows()
    }

    pub fn get(&self, variable: &str) -> Option<f64> {
        self.variables.iter().position(|v| v == variable).map(|j| self.mean[j])
    }

    pub fn column(&self, variable: &str) -> Option<Vec<f64>> {
        let j = self.variables.iter().position(|v| v == variable)?;
        Some(self.raw.column(j).to_vec())
    }
}

/// Checks the predictor was fitted on the background's columns.
fn check_background(model: &dyn Predictor, background: &Dataset) -> Result<()> {
    if background.n_rows() == 0 {
        return Err(Error::InvalidData("background has no rows".into()));
    }
    if model.n_features() != background.n_cols() {
        return Err(Error::VariableMismatch(format!(
            "model expects {} columns, background `{}` has {}",
            model.n_features(),
            background.name(),
            background.n_cols()
        )));
    }
    if let Some(names) = model.feature_names() {
        if names != background.feature_names() {
            return Err(Error::VariableMismatch(format!(
                "model columns {names:?} differ from background columns {:?}",
                background.feature_names()
            )));
        }
    }
    Ok(())
}

pub fn background_id(background: &Dataset) -> String {
    format!("{}-{}", background.name(), &background.checksum()[..12])
}

pub const PROFILE_HEADER: [&str; 5] = ["kind", "model_id", "variable", "grid_point", "value"];
pub const IMPORTANCE_HEADER: [&str; 4] = ["model_id", "variable", "repeat", "loss_increase"];

pub fn profiles_to_csv(profiles: &[Profile]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PROFILE_HEADER)?;
    for p in profiles {
        for (z, v) in p.grid.points.iter().zip(&p.values) {
            w.write_record([
                p.kind.as_str(),
                &p.model_id,
                &p.variable,
                &z.to_string(),
                &v.to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn importance_to_csv(vectors: &[ImportanceVector]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(IMPORTANCE_HEADER)?;
    for iv in vectors {
        for (j, var) in iv.variables.iter().enumerate() {
            for r in 0..iv.repeats() {
                w.write_record([&iv.model_id, var, &r.to_string(), &iv.raw[[r, j]].to_string()])?;
            }
        }
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidData(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
