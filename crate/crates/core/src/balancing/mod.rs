//! Resampling methods that equalize class counts before training.
//!
//! Undersampling: [`random_under`], [`near_miss`] (NearMiss-1).
//! Oversampling: [`random_over`], [`smote`], [`borderline_smote`]
//! (Borderline-1). Hybrid: [`smote_tomek`].
//!
//! Every method targets whichever class is the minority in the input, so
//! callers never hard-code a label. All methods are deterministic given
//! `BalancerSpec::seed`.

mod knn;
mod oversample;
mod tomek;
mod undersample;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

pub use knn::{knn, Neighbor};
pub use oversample::{borderline_smote, random_over, smote, Step};
pub use tomek::{smote_tomek, tomek_links};
pub use undersample::{near_miss, random_under};

use crate::data::{Dataset, Source};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RandomUnder,
    NearMiss,
    RandomOver,
    Smote,
    BorderlineSmote,
    SmoteTomek,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::RandomUnder,
        Method::NearMiss,
        Method::RandomOver,
        Method::Smote,
        Method::BorderlineSmote,
        Method::SmoteTomek,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::RandomUnder => "random_under",
            Method::NearMiss => "near_miss",
            Method::RandomOver => "random_over",
            Method::Smote => "smote",
            Method::BorderlineSmote => "borderline_smote",
            Method::SmoteTomek => "smote_tomek",
        }
    }

    pub fn synthesizes(self) -> bool {
        matches!(self, Method::Smote | Method::BorderlineSmote | Method::SmoteTomek)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown balancing method '{s}'")))
    }
}

pub const DEFAULT_K_NEIGHBORS: usize = 5;
pub const DEFAULT_M_NEIGHBORS: usize = 10;
pub const DEFAULT_NEAR_MISS_K: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalancerSpec {
    pub method: Method,
    #[serde(default = "default_k")]
    pub k_neighbors: usize,
    #[serde(default = "default_m")]
    pub m_neighbors: usize,
    #[serde(default = "default_near_miss_k")]
    pub near_miss_k: usize,
    #[serde(default)]
    pub seed: u64,
    /// Compute neighbor distances on standardized features.
    #[serde(default)]
    pub standardize: bool,
}

fn default_k() -> usize {
    DEFAULT_K_NEIGHBORS
}
fn default_m() -> usize {
    DEFAULT_M_NEIGHBORS
}
fn default_near_miss_k() -> usize {
    DEFAULT_NEAR_MISS_K
}

impl BalancerSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            k_neighbors: DEFAULT_K_NEIGHBORS,
            m_neighbors: DEFAULT_M_NEIGHBORS,
            near_miss_k: DEFAULT_NEAR_MISS_K,
            seed: 0,
            standardize: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::InvalidArgument("k_neighbors must be at least 1".into()));
        }
        if self.near_miss_k == 0 {
            return Err(Error::InvalidArgument("near_miss_k must be at least 1".into()));
        }
        if self.method == Method::BorderlineSmote && self.m_neighbors < self.k_neighbors {
            return Err(Error::InvalidArgument(format!(
                "m_neighbors ({}) must be >= k_neighbors ({})",
                self.m_neighbors, self.k_neighbors
            )));
        }
        Ok(())
    }
}

/// Output of a balancing call.
#[derive(Debug, Clone)]
pub struct BalancedDataset {
    pub data: Dataset,
    pub origin: String,
    pub spec: BalancerSpec,
    /// True where a row was synthesized rather than copied.
    pub synthetic_mask: Vec<bool>,
    /// For synthetic rows: the (base, neighbor) input rows it interpolates.
    pub parents: Vec<Option<(usize, usize)>>,
    /// Rows removed as members of Tomek links (smote_tomek only).
    pub links_removed: usize,
    pub warnings: Vec<String>,
}

/// Dispatch on `spec.method`.
pub fn balance(d: &Dataset, spec: &BalancerSpec) -> Result<BalancedDataset> {
    spec.validate()?;
    match spec.method {
        Method::RandomUnder => random_under(d, spec.seed).map(|mut b| {
            b.spec = spec.clone();
            b
        }),
        Method::NearMiss => near_miss(d, spec),
        Method::RandomOver => random_over(d, spec.seed).map(|mut b| {
            b.spec = spec.clone();
            b
        }),
        Method::Smote => smote(d, spec),
        Method::BorderlineSmote => borderline_smote(d, spec),
        Method::SmoteTomek => smote_tomek(d, spec),
    }
}

pub(crate) struct Classes {
    pub minority: u8,
    pub minority_rows: Vec<usize>,
    pub majority_rows: Vec<usize>,
}

pub(crate) fn classes(d: &Dataset) -> Classes {
    let minority = d.summarize().minority_class;
    Classes {
        minority,
        minority_rows: d.class_indices(minority),
        majority_rows: d.class_indices(1 - minority),
    }
}

/// Feature matrix in the space used for distances.
pub(crate) fn distance_space(x: ArrayView2<'_, f64>, standardize: bool) -> Array2<f64> {
    let mut out = x.to_owned();
    if standardize {
        for mut col in out.axis_iter_mut(Axis(1)) {
            let n = col.len() as f64;
            let mean = col.sum() / n;
            let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
            let scale = if sd > 0.0 { sd } else { 1.0 };
            col.mapv_inplace(|v| (v - mean) / scale);
        }
    }
    out
}

/// Copied input rows (in the given order) followed by synthetic rows.
pub(crate) fn assemble(
    d: &Dataset,
    kept: &[usize],
    synthetic: Option<(Array2<f64>, u8, Vec<(usize, usize)>)>,
    spec: &BalancerSpec,
    warnings: Vec<String>,
) -> Result<BalancedDataset> {
    let mut x = d.features().select(Axis(0), kept);
    let mut y: Vec<u8> = kept.iter().map(|&i| d.target()[i]).collect();
    let mut mask = vec![false; kept.len()];
    let mut parents = vec![None; kept.len()];
    if let Some((rows, label, pairs)) = synthetic {
        if rows.nrows() > 0 {
            x.append(Axis(0), rows.view())
                .map_err(|e| Error::InvalidData(e.to_string()))?;
            y.extend(std::iter::repeat_n(label, rows.nrows()));
            mask.extend(std::iter::repeat_n(true, rows.nrows()));
            parents.extend(pairs.into_iter().map(Some));
        }
    }
    let data = Dataset::new(
        format!("{}_{}", d.name(), spec.method),
        x,
        d.feature_names().to_vec(),
        y,
        Source::Derived,
    )?;
    Ok(BalancedDataset {
        data,
        origin: d.name().to_string(),
        spec: spec.clone(),
        synthetic_mask: mask,
        parents,
        links_removed: 0,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("adasyn".parse::<Method>().is_err());
    }

    #[test]
    fn spec_validation_and_json_defaults() {
        let mut s = BalancerSpec::new(Method::BorderlineSmote);
        s.validate().unwrap();
        s.m_neighbors = 2;
        assert!(s.validate().is_err());
        let parsed: BalancerSpec = serde_json::from_str(r#"{"method":"smote","seed":4}"#).unwrap();
        assert_eq!(parsed.k_neighbors, 5);
        assert_eq!(parsed.seed, 4);
        assert!(serde_json::from_str::<BalancerSpec>(r#"{"method":"smote","kk":1}"#).is_err());
    }
}
