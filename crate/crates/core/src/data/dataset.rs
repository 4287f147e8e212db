use std::collections::HashSet;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Csv,
    Openml,
    Simulated,
    Derived,
}

/// A continuous feature matrix with a binary target.
///
/// Construction validates that there are no missing values, that both
/// classes are present and that feature names are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Array2<f64>,
    feature_names: Vec<String>,
    target: Vec<u8>,
    source: Source,
}

/// Class balance of a dataset. `imbalance_ratio` is majority over minority.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceSummary {
    pub n_rows: usize,
    pub n_cols: usize,
    pub minority_class: u8,
    pub imbalance_ratio: f64,
}

/// Class designated as minority when both classes have the same count.
pub const TIE_MINORITY_CLASS: u8 = 1;

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Array2<f64>,
        feature_names: Vec<String>,
        target: Vec<u8>,
        source: Source,
    ) -> Result<Self> {
        let name = name.into();
        let (n, m) = features.dim();
        if feature_names.len() != m {
            return Err(Error::InvalidData(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                m
            )));
        }
        let mut seen = HashSet::new();
        for fname in &feature_names {
            if !seen.insert(fname.as_str()) {
                return Err(Error::InvalidData(format!(
                    "duplicate feature name '{fname}'"
                )));
            }
        }
        if target.len() != n {
            return Err(Error::InvalidData(format!(
                "target has {} entries for {} rows",
                target.len(),
                n
            )));
        }
        if let Some(bad) = target.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidData(format!("target value {bad} is not 0/1")));
        }
        if let Some(((row, col), _)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "missing or non-finite value at row {row}, column '{}'",
                feature_names[col]
            )));
        }
        let ones = target.iter().filter(|&&y| y == 1).count();
        if ones == 0 || ones == n {
            let only = if ones == 0 { "0" } else { "1" };
            return Err(Error::SingleClass(only.to_string()));
        }
        Ok(Self {
            name,
            features,
            feature_names,
            target,
            source,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.features.ncols()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.features.column(j)
    }

    pub fn column_index(&self, variable: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == variable)
            .ok_or_else(|| Error::MissingColumn(variable.to_string()))
    }

    /// Counts of class 0 and class 1.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.target.iter().filter(|&&y| y == 1).count();
        [self.target.len() - ones, ones]
    }

    pub fn class_indices(&self, class: u8) -> Vec<usize> {
        self.target
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == class)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn summarize(&self) -> ImbalanceSummary {
        let [c0, c1] = self.class_counts();
        let minority_class = match c0.cmp(&c1) {
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Equal => TIE_MINORITY_CLASS,
        };
        ImbalanceSummary {
            n_rows: self.n_rows(),
            n_cols: self.n_cols(),
            minority_class,
            imbalance_ratio: c0.max(c1) as f64 / c0.min(c1) as f64,
        }
    }

    /// New dataset made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize], name: impl Into<String>) -> Result<Dataset> {
        let features = self.features.select(Axis(0), rows);
        let target = rows.iter().map(|&i| self.target[i]).collect();
        Dataset::new(
            name,
            features,
            self.feature_names.clone(),
            target,
            Source::Derived,
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// SHA-256 over names, feature bytes and target; identifies content.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for fname in &self.feature_names {
            hasher.update((fname.len() as u64).to_le_bytes());
            hasher.update(fname.as_bytes());
        }
        for v in self.features.iter() {
            hasher.update(v.to_le_bytes());
        }
        hasher.update(&self.target);
        hex(&hasher.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn names(m: usize) -> Vec<String> {
        (0..m).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn rejects_nan() {
        let err = Dataset::new("d", array![[1.0], [f64::NAN]], names(1), vec![0, 1], Source::Derived)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidData(_)));
    }

    #[test]
    fn rejects_single_class_and_duplicate_names() {
        assert!(matches!(
            Dataset::new("d", array![[1.0], [2.0]], names(1), vec![1, 1], Source::Derived),
            Err(Error::SingleClass(_))
        ));
        assert!(Dataset::new(
            "d",
            array![[1.0, 2.0], [2.0, 3.0]],
            vec!["a".into(), "a".into()],
            vec![0, 1],
            Source::Derived
        )
        .is_err());
    }

    #[test]
    fn summary_ratio_and_tie() {
        let x = Array2::zeros((100, 1));
        let mut y = vec![0u8; 60];
        y.extend(vec![1u8; 40]);
        let d = Dataset::new("d", x, names(1), y, Source::Derived).unwrap();
        let s = d.summarize();
        assert_eq!(s.imbalance_ratio, 1.5);
        assert_eq!(s.minority_class, 1);
        assert_eq!((s.n_rows, s.n_cols), (100, 1));

        let x = Array2::zeros((10, 2));
        let y = (0..10).map(|i| (i % 2) as u8).collect();
        let d = Dataset::new("d", x, names(2), y, Source::Derived).unwrap();
        let s = d.summarize();
        assert_eq!(s.imbalance_ratio, 1.0);
        assert_eq!(s.minority_class, TIE_MINORITY_CLASS);
    }

    #[test]
    fn minority_zero_when_ones_dominate() {
        let x = Array2::zeros((5, 1));
        let d = Dataset::new("d", x, names(1), vec![1, 1, 1, 0, 1], Source::Derived).unwrap();
        let s = d.summarize();
        assert_eq!(s.minority_class, 0);
        assert_eq!(s.imbalance_ratio, 4.0);
    }
}
