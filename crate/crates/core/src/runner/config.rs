use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::balancing::{BalancerSpec, Method};
use crate::compare::DEFAULT_ALPHA;
use crate::data::{DEFAULT_TEST_FRACTION, simulate::DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::explain::{GridConstruction, DEFAULT_ALE_BINS, DEFAULT_GRID_POINTS, DEFAULT_VI_REPEATS};
use crate::learners::{Family, LearnerSpec};

/// Name of the implicit reference method in results.
pub const BASELINE: &str = "none";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// An entry of the built-in registry, fetched from OpenML.
    Registry(String),
    Csv { path: PathBuf, target: String },
    /// The twelve-scenario simulation grid.
    Simulation {
        #[serde(default = "default_samples")]
        n_samples: usize,
    },
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

/// A balancer given either as a method name or a full spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BalancerChoice {
    Name(String),
    Spec(BalancerSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LearnerChoice {
    Name(String),
    Spec(LearnerSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainSettings {
    #[serde(default = "default_grid_k")]
    pub grid_k: usize,
    #[serde(default)]
    pub grid: GridConstruction,
    #[serde(default = "default_ale_bins")]
    pub ale_bins: usize,
    #[serde(default = "default_vi_repeats")]
    pub vi_repeats: usize,
}

fn default_grid_k() -> usize {
    DEFAULT_GRID_POINTS
}
fn default_ale_bins() -> usize {
    DEFAULT_ALE_BINS
}
fn default_vi_repeats() -> usize {
    DEFAULT_VI_REPEATS
}

impl Default for ExplainSettings {
    fn default() -> Self {
        Self {
            grid_k: DEFAULT_GRID_POINTS,
            grid: GridConstruction::Uniform,
            ale_bins: DEFAULT_ALE_BINS,
            vi_repeats: DEFAULT_VI_REPEATS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSource>,
    #[serde(default = "all_balancers")]
    pub balancers: Vec<BalancerChoice>,
    #[serde(default = "all_learners")]
    pub learners: Vec<LearnerChoice>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub explain: ExplainSettings,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Where fetched registry datasets are kept; defaults to
    /// `<output_dir>/openml-cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Independent split/seed repetitions per dataset.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Reuse per-cell results stored under `<output_dir>/cache`.
    #[serde(default = "default_true")]
    pub reuse_cache: bool,
    /// Also write every trained model to `<output_dir>/models`.
    #[serde(default)]
    pub save_models: bool,
}

fn all_balancers() -> Vec<BalancerChoice> {
    Method::ALL.iter().map(|m| BalancerChoice::Name(m.as_str().into())).collect()
}
fn all_learners() -> Vec<LearnerChoice> {
    Family::ALL.iter().map(|f| LearnerChoice::Name(f.as_str().into())).collect()
}
fn default_test_fraction() -> f64 {
    DEFAULT_TEST_FRACTION
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_repeats() -> usize {
    1
}
fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn new(datasets: Vec<DatasetSource>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            datasets,
            balancers: all_balancers(),
            learners: all_learners(),
            test_fraction: DEFAULT_TEST_FRACTION,
            explain: ExplainSettings::default(),
            alpha: DEFAULT_ALPHA,
            master_seed: 0,
            output_dir: output_dir.into(),
            cache_dir: None,
            workers: None,
            repeats: 1,
            reuse_cache: true,
            save_models: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Balancers in config order, without the baseline; seeds are assigned
    /// per cell by the runner.
    pub fn balancer_specs(&self) -> Result<Vec<BalancerSpec>> {
        let mut out = Vec::new();
        for choice in &self.balancers {
            let spec = match choice {
                BalancerChoice::Name(name) if name == BASELINE => continue,
                BalancerChoice::Name(name) => BalancerSpec::new(name.parse().map_err(config_err)?),
                BalancerChoice::Spec(spec) => spec.clone(),
            };
            spec.validate().map_err(config_err)?;
            out.push(spec);
        }
        let distinct: BTreeSet<Method> = out.iter().map(|s| s.method).collect();
        if distinct.len() != out.len() {
            return Err(Error::Config("each balancing method may appear once".into()));
        }
        Ok(out)
    }

    pub fn learner_specs(&self) -> Result<Vec<LearnerSpec>> {
        let mut out = Vec::new();
        for choice in &self.learners {
            let spec = match choice {
                LearnerChoice::Name(name) => LearnerSpec::with_defaults(name.parse().map_err(config_err)?, 0),
                LearnerChoice::Spec(spec) => spec.clone(),
            };
            spec.validate().map_err(config_err)?;
            out.push(spec);
        }
        let distinct: BTreeSet<Family> = out.iter().map(|s| s.family).collect();
        if distinct.len() != out.len() {
            return Err(Error::Config("each learner family may appear once".into()));
        }
        if out.is_empty() {
            return Err(Error::Config("at least one learner is required".into()));
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("at least one dataset is required".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!("test_fraction must be in (0, 1), got {}", self.test_fraction)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        let e = &self.explain;
        if e.grid_k < 2 || e.ale_bins == 0 || e.vi_repeats == 0 {
            return Err(Error::Config("grid_k ≥ 2, ale_bins ≥ 1 and vi_repeats ≥ 1 are required".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        for d in &self.datasets {
            if let DatasetSource::Simulation { n_samples } = d {
                if *n_samples < crate::data::simulate::MIN_SAMPLES {
                    return Err(Error::Config(format!("simulation needs n_samples ≥ 100, got {n_samples}")));
                }
            }
        }
        self.balancer_specs()?;
        self.learner_specs()?;
        Ok(())
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join("openml-cache"))
    }
}

fn config_err(e: Error) -> Error {
    Error::Config(e.to_string())
}
