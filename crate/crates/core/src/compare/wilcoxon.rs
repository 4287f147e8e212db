use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::explain::ImportanceVector;

/// Largest number of non-zero pairs for which the exact null distribution
/// is enumerated.
pub const EXACT_MAX_PAIRS: usize = 15;
/// Below this many non-zero pairs the test is flagged as low-power.
pub const LOW_POWER_PAIRS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Smaller of the positive and negative signed-rank sums.
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n_pairs: usize,
    pub exact: bool,
}

/// Two-sided Wilcoxon signed-rank test of `x - y`.
///
/// Zero differences are dropped and tied magnitudes share their mean rank.
/// Up to [`EXACT_MAX_PAIRS`] pairs the p-value comes from the exact sign-flip
/// distribution of those ranks; beyond that from a normal approximation with
/// tie-corrected variance. When every difference is zero the statistic is 0
/// and p = 1.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("paired samples must be finite".into()));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult { statistic: 0.0, p_value: 1.0, n_pairs: 0, exact: true });
    }
    let (doubled_ranks, tie_sizes) = doubled_midranks(&diffs);
    let total: u64 = doubled_ranks.iter().sum();
    let plus: u64 = doubled_ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let low = plus.min(total - plus);
    let statistic = low as f64 / 2.0;

    if n <= EXACT_MAX_PAIRS {
        let counts = sign_flip_counts(&doubled_ranks);
        let at_or_below: f64 = counts[..=low as usize].iter().sum();
        let all = 2f64.powi(n as i32);
        let p = (2.0 * at_or_below / all).min(1.0);
        return Ok(WilcoxonResult { statistic, p_value: p, n_pairs: n, exact: true });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = (statistic - mean) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * normal.cdf(-z.abs())).min(1.0)
    };
    Ok(WilcoxonResult { statistic, p_value: p, n_pairs: n, exact: false })
}

/// Twice the mid-ranks of |d| (integers even with ties) and the tie group
/// sizes.
fn doubled_midranks(diffs: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0u64; diffs.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && diffs[order[end]].abs() == diffs[order[start]].abs() {
            end += 1;
        }
        // ranks start+1 ..= end, doubled mean = start + 1 + end
        for &i in &order[start..end] {
            ranks[i] = (start + 1 + end) as u64;
        }
        ties.push((end - start) as u64);
        start = end;
    }
    (ranks, ties)
}

/// Number of sign assignments giving each positive-rank sum.
fn sign_flip_counts(ranks: &[u64]) -> Vec<f64> {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0.0; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Benjamini–Hochberg adjusted p-values, in input order.
pub fn fdr_adjust(p_values: &[f64]) -> Result<Vec<f64>> {
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("p-value {p} outside [0, 1]")));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (pos, &i) in order.iter().enumerate().rev() {
        let scaled = p_values[i] * m as f64 / (pos + 1) as f64;
        running = running.min(scaled);
        adjusted[i] = running.max(p_values[i]);
    }
    Ok(adjusted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViPairing {
    /// One pair per variable: the mean importances.
    #[default]
    Variables,
    /// One pair per (repeat, variable) cell of the raw matrices.
    Repeats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub adjusted_p: f64,
    pub rejected: bool,
    pub n_pairs: usize,
    pub exact: bool,
    pub low_power: bool,
}

impl ViTestResult {
    pub fn set_adjusted(&mut self, adjusted_p: f64, alpha: f64) {
        self.adjusted_p = adjusted_p;
        self.rejected = adjusted_p < alpha;
    }
}

/// Wilcoxon test between two importance vectors over the same variables.
///
/// The result is adjusted as a family of one; callers running many tests
/// pass them all through [`apply_fdr`].
pub fn compare_vi(vi1: &ImportanceVector, vi2: &ImportanceVector, alpha: f64) -> Result<ViTestResult> {
    compare_vi_with(vi1, vi2, alpha, ViPairing::Variables)
}

pub fn compare_vi_with(
    vi1: &ImportanceVector,
    vi2: &ImportanceVector,
    alpha: f64,
    pairing: ViPairing,
) -> Result<ViTestResult> {
    let mut a = vi1.variables.clone();
    let mut b = vi2.variables.clone();
    a.sort();
    b.sort();
    if a != b {
        return Err(Error::VariableMismatch(format!(
            "importance vectors cover different variables: {:?} vs {:?}",
            vi1.variables, vi2.variables
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = match pairing {
        ViPairing::Variables => vi1
            .variables
            .iter()
            .map(|v| (vi1.get(v).unwrap(), vi2.get(v).unwrap()))
            .unzip(),
        ViPairing::Repeats => {
            if vi1.repeats() != vi2.repeats() {
                return Err(Error::InvalidArgument(format!(
                    "repeat pairing needs equal repeat counts, got {} and {}",
                    vi1.repeats(),
                    vi2.repeats()
                )));
            }
            let mut x = Vec::new();
            let mut y = Vec::new();
            for v in &vi1.variables {
                x.extend(vi1.column(v).unwrap());
                y.extend(vi2.column(v).unwrap());
            }
            (x, y)
        }
    };
    let w = wilcoxon_signed_rank(&x, &y)?;
    let mut out = ViTestResult {
        statistic: w.statistic,
        p_value: w.p_value,
        adjusted_p: w.p_value,
        rejected: false,
        n_pairs: w.n_pairs,
        exact: w.exact,
        low_power: x.len() < LOW_POWER_PAIRS,
    };
    out.set_adjusted(w.p_value, alpha);
    Ok(out)
}

/// Adjusts every test in the family together and sets rejection flags.
pub fn apply_fdr(results: &mut [&mut ViTestResult], alpha: f64) -> Result<()> {
    let p: Vec<f64> = results.iter().map(|r| r.p_value).collect();
    let adjusted = fdr_adjust(&p)?;
    for (r, a) in results.iter_mut().zip(adjusted) {
        r.set_adjusted(a, alpha);
    }
    Ok(())
}
