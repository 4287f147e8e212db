//! Controlled-imbalance simulation.
//!
//! `z = β₀ + 2.9·X1 − 3.7·X2 + 1.2·X3 + ε`, `Xk ~ N(0, 1)`, `ε ~ N(0, v)`,
//! `Y ~ Bernoulli(1 / (1 + exp(−z)))`. The intercept controls the imbalance
//! ratio; for β₀ > 0 class 1 is the majority.

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Source};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

pub const COEFFICIENTS: [f64; 3] = [2.9, -3.7, 1.2];
pub const GRID_BETA0: [f64; 4] = [1.5, 2.5, 3.5, 4.5];
pub const GRID_VARIANCE: [f64; 3] = [1.0, 2.0, 3.0];
pub const MIN_SAMPLES: usize = 100;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const TARGET_NAME: &str = "Y";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationScenario {
    pub beta0: f64,
    pub error_variance: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl SimulationScenario {
    pub fn new(beta0: f64, error_variance: f64, n_samples: usize, seed: u64) -> Result<Self> {
        let s = Self {
            beta0,
            error_variance,
            n_samples,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.error_variance > 0.0 && self.error_variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "error variance must be positive, got {}",
                self.error_variance
            )));
        }
        if !self.beta0.is_finite() {
            return Err(Error::InvalidArgument("beta0 must be finite".into()));
        }
        if self.n_samples < MIN_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "n_samples must be at least {MIN_SAMPLES}, got {}",
                self.n_samples
            )));
        }
        Ok(())
    }
}

pub fn simulate(scenario: &SimulationScenario) -> Result<Dataset> {
    simulate_linear_logit(scenario, COEFFICIENTS)
}

/// Same generator with arbitrary slope coefficients.
///
/// Per row the draw order is X1, X2, X3, ε, then the Bernoulli uniform.
pub fn simulate_linear_logit(
    scenario: &SimulationScenario,
    coefficients: [f64; 3],
) -> Result<Dataset> {
    scenario.validate()?;
    let n = scenario.n_samples;
    let sd = scenario.error_variance.sqrt();
    let mut rng = rng_from_seed(scenario.seed);
    let mut x = Array2::zeros((n, 3));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = scenario.beta0;
        for (k, coef) in coefficients.iter().enumerate() {
            let v: f64 = rng.sample(StandardNormal);
            x[[i, k]] = v;
            z += coef * v;
        }
        let eps: f64 = rng.sample(StandardNormal);
        z += sd * eps;
        let p = 1.0 / (1.0 + (-z).exp());
        let u: f64 = rng.random();
        y.push(u8::from(u < p));
    }
    let names = (1..=3).map(|k| format!("X{k}")).collect();
    let name = format!("sim_b{}_v{}", scenario.beta0, scenario.error_variance);
    Dataset::new(name, x, names, y, Source::Simulated)
}

/// Name used for scenario `(group, var)`, both 1-based as in the figure
/// captions: group i ↔ β₀ = GRID_BETA0[i-1], var j ↔ v = GRID_VARIANCE[j-1].
pub fn scenario_name(group: usize, var: usize) -> String {
    format!("group{group}_var{var}")
}

/// The twelve β₀ × v scenarios, each with a seed derived from `master_seed`
/// and its (group, var) index.
pub fn scenario_grid(n_samples: usize, master_seed: u64) -> Result<Vec<(SimulationScenario, Dataset)>> {
    grid_scenarios(n_samples, master_seed)?
        .into_iter()
        .map(|(name, s)| Ok((s, simulate(&s)?.with_name(name))))
        .collect()
}

/// Scenario definitions of the grid without generating data.
pub fn grid_scenarios(n_samples: usize, master_seed: u64) -> Result<Vec<(String, SimulationScenario)>> {
    let mut out = Vec::with_capacity(12);
    for (gi, &beta0) in GRID_BETA0.iter().enumerate() {
        for (vj, &v) in GRID_VARIANCE.iter().enumerate() {
            let (group, var) = (gi + 1, vj + 1);
            let seed = derive_seed(
                master_seed,
                &["simulation", &group.to_string(), &var.to_string()],
            );
            out.push((
                scenario_name(group, var),
                SimulationScenario::new(beta0, v, n_samples, seed)?,
            ));
        }
    }
    Ok(out)
}
