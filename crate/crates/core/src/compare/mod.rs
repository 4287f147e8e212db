//! Behavior-change and performance metrics between a baseline model and a
//! model trained on balanced data.

mod wilcoxon;

use serde::{Deserialize, Serialize};

pub use wilcoxon::{
    apply_fdr, compare_vi, compare_vi_with, fdr_adjust, wilcoxon_signed_rank, ViPairing,
    ViTestResult, WilcoxonResult, EXACT_MAX_PAIRS, LOW_POWER_PAIRS,
};

use crate::error::{Error, Result};
use crate::explain::{Profile, ProfileKind};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SddResult {
    pub variable: String,
    pub kind: ProfileKind,
    pub sdd: f64,
    pub grid_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsddResult {
    pub kind: ProfileKind,
    pub asdd: f64,
    pub per_variable: Vec<SddResult>,
}

/// Population standard deviation of the pointwise differences between two
/// profiles evaluated on the same grid. Vertical offsets cancel out.
pub fn sdd(p1: &Profile, p2: &Profile) -> Result<SddResult> {
    if p1.variable != p2.variable || p1.kind != p2.kind {
        return Err(Error::GridMismatch(format!(
            "cannot compare {} `{}` with {} `{}`",
            p1.kind, p1.variable, p2.kind, p2.variable
        )));
    }
    let same_grid = p1.grid.points.len() == p2.grid.points.len()
        && p1
            .grid
            .points
            .iter()
            .zip(&p2.grid.points)
            .all(|(a, b)| a.to_bits() == b.to_bits());
    if !same_grid || p1.values.len() != p1.grid.points.len() || p2.values.len() != p2.grid.points.len() {
        return Err(Error::GridMismatch(format!(
            "{} profiles of `{}` are on different grids",
            p1.kind, p1.variable
        )));
    }
    let diffs: Vec<f64> = p1.values.iter().zip(&p2.values).map(|(a, b)| a - b).collect();
    Ok(SddResult {
        variable: p1.variable.clone(),
        kind: p1.kind,
        sdd: population_sd(&diffs),
        grid_k: diffs.len(),
    })
}

fn population_sd(v: &[f64]) -> f64 {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    (v.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / k).sqrt()
}

/// Mean SDD over variables. Profiles are paired by variable name; both
/// lists must cover the same variables with the same kind.
pub fn asdd(profiles1: &[Profile], profiles2: &[Profile]) -> Result<AsddResult> {
    let Some(first) = profiles1.first() else {
        return Err(Error::VariableMismatch("no profiles to compare".into()));
    };
    let kind = first.kind;
    let mut names1: Vec<&str> = profiles1.iter().map(|p| p.variable.as_str()).collect();
    let mut names2: Vec<&str> = profiles2.iter().map(|p| p.variable.as_str()).collect();
    names1.sort_unstable();
    names2.sort_unstable();
    let has_repeat = names1.windows(2).any(|w| w[0] == w[1]);
    if names1 != names2 || has_repeat {
        return Err(Error::VariableMismatch(format!(
            "variable sets differ: {names1:?} vs {names2:?}"
        )));
    }
    let per_variable = profiles1
        .iter()
        .map(|p1| {
            if p1.kind != kind {
                return Err(Error::GridMismatch("mixed profile kinds in one ASDD".into()));
            }
            let p2 = profiles2.iter().find(|p| p.variable == p1.variable).expect("names checked");
            sdd(p1, p2)
        })
        .collect::<Result<Vec<_>>>()?;
    let asdd = per_variable.iter().map(|r| r.sdd).sum::<f64>() / per_variable.len() as f64;
    Ok(AsddResult { kind, asdd, per_variable })
}

/// Mean of the true positive and true negative rates.
pub fn balanced_accuracy(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels against {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let c = usize::from(t != 0);
        totals[c] += 1;
        hits[c] += usize::from((t != 0) == (p != 0));
    }
    if totals.contains(&0) {
        return Err(Error::SingleClass("balanced accuracy needs both classes in y_true".into()));
    }
    Ok(0.5 * (hits[0] as f64 / totals[0] as f64 + hits[1] as f64 / totals[1] as f64))
}
