use rand::seq::SliceRandom;

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub test_fraction: f64,
    pub seed: u64,
    /// Original row indices of each side, ascending.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Stratified train/test split.
///
/// The test side gets `round(test_fraction · n)` rows, allotted to classes
/// by largest remainder of `test_fraction · count` (ties go to class 0),
/// then clamped so both sides keep at least one member of every class.
/// Rows keep their original relative order on both sides.
pub fn stratified_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let counts = d.class_counts();
    for (class, &count) in counts.iter().enumerate() {
        if count < 2 {
            return Err(Error::TooFewRows(format!(
                "class {class} has {count} row(s); need 2 to split"
            )));
        }
    }
    let n_test = allocate(counts, test_fraction);

    let mut rng = rng_from_seed(seed);
    let mut test_rows = Vec::new();
    let mut train_rows = Vec::new();
    for class in [0u8, 1] {
        let mut idx = d.class_indices(class);
        let k = n_test[class as usize];
        idx.shuffle(&mut rng);
        test_rows.extend_from_slice(&idx[..k]);
        train_rows.extend_from_slice(&idx[k..]);
    }
    test_rows.sort_unstable();
    train_rows.sort_unstable();
    Ok(SplitPair {
        train: d.select_rows(&train_rows, format!("{}_train", d.name()))?,
        test: d.select_rows(&test_rows, format!("{}_test", d.name()))?,
        test_fraction,
        seed,
        train_rows,
        test_rows,
    })
}

fn allocate(counts: [usize; 2], fraction: f64) -> [usize; 2] {
    let n = counts[0] + counts[1];
    let total = (fraction * n as f64).round() as usize;
    let ideal = counts.map(|c| fraction * c as f64);
    let mut alloc = ideal.map(|v| v.floor() as usize);
    let mut remaining = total.saturating_sub(alloc[0] + alloc[1]);
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - ideal[a].floor();
        let rb = ideal[b] - ideal[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &c in order.iter().cycle().take(2) {
        if remaining == 0 {
            break;
        }
        alloc[c] += 1;
        remaining -= 1;
    }
    for c in 0..2 {
        alloc[c] = alloc[c].clamp(1, counts[c] - 1);
    }
    alloc
}
