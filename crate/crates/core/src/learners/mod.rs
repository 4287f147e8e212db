//! Classifier families behind one train / predict-probability interface.

mod boosting;
mod forest;
mod logistic;
mod persist;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use boosting::{BoostingModel, BoostingParams};
pub use forest::{ForestModel, ForestParams};
pub use logistic::{LogisticModel, LogisticParams};
pub use persist::{load_model, model_from_bytes, model_to_bytes, save_model};
pub use tree::FlatTree;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Anything that maps a feature matrix to one score per row.
///
/// Explanation estimators only need this, which lets tests plug in
/// closed-form functions next to trained models.
pub trait Predictor: Sync {
    fn n_features(&self) -> usize;
    /// Caller guarantees `rows.ncols() == self.n_features()`.
    fn predict(&self, rows: ArrayView2<'_, f64>) -> Vec<f64>;
    fn model_id(&self) -> String;
    /// Column names the predictor was fitted on, when known.
    fn feature_names(&self) -> Option<&[String]> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logistic,
    RandomForest,
    GradientBoosting,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Logistic, Family::RandomForest, Family::GradientBoosting];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::RandomForest => "random_forest",
            Family::GradientBoosting => "gradient_boosting",
        }
    }

    /// Hyperparameter names and their defaults.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            Family::Logistic => &[("l2", 1e-4), ("max_iter", 1000.0), ("tol", 1e-6)],
            Family::RandomForest => &[
                ("max_depth", 0.0),
                ("max_features", 0.0),
                ("min_samples_split", 2.0),
                ("n_trees", 100.0),
            ],
            Family::GradientBoosting => &[
                ("lambda", 1.0),
                ("learning_rate", 0.1),
                ("max_depth", 3.0),
                ("min_child_weight", 1.0),
                ("n_rounds", 100.0),
            ],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown learner family `{s}`")))
    }
}

/// Family, overrides of its hyperparameters, and seed.
///
/// Random forest uses 0 for "no depth cap" and for "⌈√m⌉ features".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub family: Family,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(family: Family, hyperparameters: BTreeMap<String, f64>, seed: u64) -> Result<Self> {
        let spec = Self { family, hyperparameters, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_defaults(family: Family, seed: u64) -> Self {
        Self { family, hyperparameters: BTreeMap::new(), seed }
    }

    pub fn set(mut self, key: &str, value: f64) -> Result<Self> {
        self.hyperparameters.insert(key.to_string(), value);
        self.validate()?;
        Ok(self)
    }

    /// Defaults overlaid with the explicit values.
    pub fn resolved(&self) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = self
            .family
            .defaults()
            .iter()
            .map(|&(k, v)| (k.to_string(), v))
            .collect();
        out.extend(self.hyperparameters.iter().map(|(k, v)| (k.clone(), *v)));
        out
    }

    pub fn validate(&self) -> Result<()> {
        let known = self.family.defaults();
        for (key, &value) in &self.hyperparameters {
            if !known.iter().any(|(k, _)| k == key) {
                return Err(Error::InvalidArgument(format!(
                    "unknown hyperparameter `{key}` for {}",
                    self.family
                )));
            }
            if !value.is_finite() {
                return Err(Error::InvalidArgument(format!("{key} must be finite")));
            }
        }
        let hp = self.resolved();
        let get = |k: &str| hp[k];
        let count = |k: &str, min: f64| -> Result<usize> {
            let v = get(k);
            if v.fract() != 0.0 || v < min {
                return Err(Error::InvalidArgument(format!(
                    "{k} must be an integer ≥ {min}, got {v}"
                )));
            }
            Ok(v as usize)
        };
        let positive = |k: &str, allow_zero: bool| -> Result<f64> {
            let v = get(k);
            if v < 0.0 || (!allow_zero && v == 0.0) {
                return Err(Error::InvalidArgument(format!("{k} out of range: {v}")));
            }
            Ok(v)
        };
        match self.family {
            Family::Logistic => {
                positive("l2", true)?;
                count("max_iter", 1.0)?;
                positive("tol", false)?;
            }
            Family::RandomForest => {
                count("n_trees", 1.0)?;
                count("max_depth", 0.0)?;
                count("min_samples_split", 2.0)?;
                count("max_features", 0.0)?;
            }
            Family::GradientBoosting => {
                count("n_rounds", 0.0)?;
                count("max_depth", 1.0)?;
                let lr = positive("learning_rate", false)?;
                if lr > 1.0 {
                    return Err(Error::InvalidArgument(format!("learning_rate must be ≤ 1, got {lr}")));
                }
                positive("lambda", true)?;
                positive("min_child_weight", true)?;
            }
        }
        Ok(())
    }

    fn logistic_params(&self) -> LogisticParams {
        let hp = self.resolved();
        LogisticParams { l2: hp["l2"], max_iter: hp["max_iter"] as usize, tol: hp["tol"] }
    }

    fn forest_params(&self) -> ForestParams {
        let hp = self.resolved();
        let nonzero = |k: &str| Some(hp[k] as usize).filter(|&v| v > 0);
        ForestParams {
            n_trees: hp["n_trees"] as usize,
            max_depth: nonzero("max_depth"),
            min_samples_split: hp["min_samples_split"] as usize,
            max_features: nonzero("max_features"),
        }
    }

    fn boosting_params(&self) -> BoostingParams {
        let hp = self.resolved();
        BoostingParams {
            n_rounds: hp["n_rounds"] as usize,
            max_depth: hp["max_depth"] as usize,
            learning_rate: hp["learning_rate"],
            lambda: hp["lambda"],
            min_child_weight: hp["min_child_weight"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelState {
    Logistic(LogisticModel),
    Forest(ForestModel),
    Boosting(BoostingModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub n_rows: usize,
    pub class_counts: [usize; 2],
    /// Penalized training loss per optimizer iteration (logistic) or
    /// training log-loss per boosting round; empty for forests.
    pub loss_trace: Vec<f64>,
    pub converged: bool,
}

/// Immutable fitted classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: LearnerSpec,
    pub state: ModelState,
    pub feature_names: Vec<String>,
    pub train_summary: TrainSummary,
    pub warnings: Vec<String>,
    id: String,
}

pub fn train(spec: &LearnerSpec, d: &Dataset) -> Result<TrainedModel> {
    spec.validate()?;
    let counts = d.class_counts();
    if counts.iter().any(|&c| c < 2) {
        return Err(Error::TooFewRows(format!(
            "training needs at least 2 rows per class, `{}` has {counts:?}",
            d.name()
        )));
    }
    let x = d.features();
    let y = d.target();
    let mut warnings = Vec::new();
    let (state, loss_trace, converged) = match spec.family {
        Family::Logistic => {
            let params = spec.logistic_params();
            let fit = logistic::fit(x, y, &params);
            if !fit.converged {
                warnings.push(format!(
                    "logistic: stopped after max_iter = {} without reaching tol",
                    params.max_iter
                ));
            }
            (ModelState::Logistic(fit.model), fit.loss_trace, fit.converged)
        }
        Family::RandomForest => {
            let model = forest::fit(x, y, &spec.forest_params(), spec.seed);
            (ModelState::Forest(model), Vec::new(), true)
        }
        Family::GradientBoosting => {
            let fit = boosting::fit(x, y, &spec.boosting_params());
            (ModelState::Boosting(fit.model), fit.loss_trace, true)
        }
    };
    let id = model_id(spec, &d.checksum());
    Ok(TrainedModel {
        spec: spec.clone(),
        state,
        feature_names: d.feature_names().to_vec(),
        train_summary: TrainSummary { n_rows: d.n_rows(), class_counts: counts, loss_trace, converged },
        warnings,
        id,
    })
}

fn model_id(spec: &LearnerSpec, data_checksum: &str) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(spec).expect("spec serializes"));
    h.update(data_checksum.as_bytes());
    let digest = crate::data::hex(&h.finalize());
    format!("{}-{}", spec.family, &digest[..12])
}

impl TrainedModel {
    pub fn id(&self) -> &str {
        &self.id
    }

    /// Logistic model with fixed raw-scale coefficients, no training.
    pub fn from_logistic_coefficients(
        feature_names: Vec<String>,
        intercept: f64,
        coefficients: Vec<f64>,
    ) -> Result<Self> {
        if feature_names.len() != coefficients.len() {
            return Err(Error::VariableMismatch(format!(
                "{} feature names for {} coefficients",
                feature_names.len(),
                coefficients.len()
            )));
        }
        let spec = LearnerSpec::with_defaults(Family::Logistic, 0);
        let mut h = Sha256::new();
        for v in std::iter::once(intercept).chain(coefficients.iter().copied()) {
            h.update(v.to_le_bytes());
        }
        let id = format!("logistic-fixed-{}", &crate::data::hex(&h.finalize())[..12]);
        Ok(Self {
            spec,
            state: ModelState::Logistic(LogisticModel::from_coefficients(intercept, coefficients)),
            feature_names,
            train_summary: TrainSummary { n_rows: 0, class_counts: [0, 0], loss_trace: Vec::new(), converged: true },
            warnings: Vec::new(),
            id,
        })
    }

    pub(crate) fn from_parts(
        spec: LearnerSpec,
        state: ModelState,
        feature_names: Vec<String>,
        train_summary: TrainSummary,
        warnings: Vec<String>,
        id: String,
    ) -> Self {
        Self { spec, state, feature_names, train_summary, warnings, id }
    }

    fn check_columns(&self, rows: &ArrayView2<'_, f64>) -> Result<()> {
        if rows.ncols() != self.feature_names.len() {
            return Err(Error::VariableMismatch(format!(
                "model expects {} columns, got {}",
                self.feature_names.len(),
                rows.ncols()
            )));
        }
        Ok(())
    }

    /// Probability of class 1 for each row.
    pub fn predict_proba(&self, rows: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        self.check_columns(&rows)?;
        Ok(self.proba_unchecked(rows))
    }

    fn proba_unchecked(&self, rows: ArrayView2<'_, f64>) -> Vec<f64> {
        let one = |row: &[f64]| -> f64 {
            let p = match &self.state {
                ModelState::Logistic(m) => logistic::sigmoid(m.decision(row)),
                ModelState::Forest(m) => m.predict_row(row),
                ModelState::Boosting(m) => logistic::sigmoid(m.margin(row)),
            };
            p.clamp(0.0, 1.0)
        };
        map_rows(rows, one)
    }

    /// Linear predictor (log-odds) for logistic and boosting models.
    pub fn predict_margin(&self, rows: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        self.check_columns(&rows)?;
        match &self.state {
            ModelState::Logistic(m) => Ok(map_rows(rows, |r| m.decision(r))),
            ModelState::Boosting(m) => Ok(map_rows(rows, |r| m.margin(r))),
            ModelState::Forest(_) => Err(Error::InvalidArgument(
                "random forest has no margin output".into(),
            )),
        }
    }

    /// 1 iff probability ≥ threshold.
    pub fn predict_label(&self, rows: ArrayView2<'_, f64>, threshold: f64) -> Result<Vec<u8>> {
        let p = self.predict_proba(rows)?;
        labels_from_proba(&p, threshold)
    }
}

pub fn labels_from_proba(p: &[f64], threshold: f64) -> Result<Vec<u8>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie strictly between 0 and 1, got {threshold}"
        )));
    }
    Ok(p.iter().map(|&v| u8::from(v >= threshold)).collect())
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

fn map_rows(rows: ArrayView2<'_, f64>, f: impl Fn(&[f64]) -> f64 + Sync) -> Vec<f64> {
    const CHUNK: usize = 512;
    let n = rows.nrows();
    if n <= CHUNK {
        let mut buf = vec![0.0; rows.ncols()];
        return rows
            .outer_iter()
            .map(|r| {
                buf.iter_mut().zip(r).for_each(|(b, v)| *b = *v);
                f(&buf)
            })
            .collect();
    }
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
    starts
        .into_par_iter()
        .flat_map_iter(|s| {
            let mut buf = vec![0.0; rows.ncols()];
            let f = &f;
            (s..(s + CHUNK).min(n))
                .map(move |i| {
                    buf.iter_mut().zip(rows.row(i)).for_each(|(b, v)| *b = *v);
                    f(&buf)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

impl Predictor for TrainedModel {
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn predict(&self, rows: ArrayView2<'_, f64>) -> Vec<f64> {
        self.proba_unchecked(rows)
    }

    fn model_id(&self) -> String {
        self.id.clone()
    }

    fn feature_names(&self) -> Option<&[String]> {
        Some(&self.feature_names)
    }
}

/// Explains a logistic or boosting model on its log-odds instead of its
/// probability. Used for closed-form checks of the estimators.
pub struct RawScore<'a>(pub &'a TrainedModel);

impl Predictor for RawScore<'_> {
    fn n_features(&self) -> usize {
        self.0.feature_names.len()
    }

    fn predict(&self, rows: ArrayView2<'_, f64>) -> Vec<f64> {
        self.0.predict_margin(rows).expect("raw score on a margin model")
    }

    fn model_id(&self) -> String {
        format!("{}-raw", self.0.id)
    }

    fn feature_names(&self) -> Option<&[String]> {
        Some(&self.0.feature_names)
    }
}

/// Wraps a plain row function as a predictor.
pub struct FnPredictor<F> {
    pub n_features: usize,
    pub id: String,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for FnPredictor<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict(&self, rows: ArrayView2<'_, f64>) -> Vec<f64> {
        map_rows(rows, &self.f)
    }

    fn model_id(&self) -> String {
        self.id.clone()
    }
}
