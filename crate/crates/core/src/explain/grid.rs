use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridConstruction {
    #[default]
    Uniform,
    Quantile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub variable: String,
    pub points: Vec<f64>,
    pub construction: GridConstruction,
}

/// Evaluation points for one variable of the background.
///
/// Uniform grids span the column range in `k` equal steps. Quantile grids
/// take the sample quantiles at `i/(k-1)` with linear interpolation between
/// order statistics (position `(n-1)p`), then drop repeats; `{1,1,2,2}` at
/// `k = 3` gives `[1, 1.5, 2]`.
pub fn make_grid(
    background: &Dataset,
    variable: &str,
    k: usize,
    construction: GridConstruction,
) -> Result<Grid> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("grid needs k ≥ 2, got {k}")));
    }
    let j = background.column_index(variable)?;
    let mut col = background.column(j).to_vec();
    col.sort_by(f64::total_cmp);
    let (lo, hi) = (col[0], col[col.len() - 1]);
    if lo == hi {
        return Err(Error::InvalidData(format!(
            "column `{variable}` is constant; no grid can be built"
        )));
    }
    let points = match construction {
        GridConstruction::Uniform => {
            let span = hi - lo;
            let steps = (k - 1) as f64;
            let mut p: Vec<f64> = (0..k).map(|i| lo + span * i as f64 / steps).collect();
            p[k - 1] = hi;
            p.dedup();
            p
        }
        GridConstruction::Quantile => {
            let steps = (k - 1) as f64;
            let mut p: Vec<f64> = (0..k).map(|i| quantile_sorted(&col, i as f64 / steps)).collect();
            p.dedup();
            p
        }
    };
    Ok(Grid { variable: variable.to_string(), points, construction })
}

/// Interpolated quantile of sorted data at probability `p`.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        (sorted[lo] + frac * (sorted[hi] - sorted[lo])).min(sorted[hi])
    }
}
