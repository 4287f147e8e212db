use ndarray::ArrayView2;
use rayon::prelude::*;

use super::tree::{bootstrap, grow_gini, FlatTree, GiniParams};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features tried per split; `None` means ⌈√m⌉.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
        }
    }
}

/// Probability = mean over trees of the leaf class-1 fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<FlatTree>,
}

impl ForestModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }
}

/// Trees are grown in parallel; tree `t` uses its own stream seeded from
/// `(seed, t)`, so the result does not depend on scheduling.
pub(crate) fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &ForestParams, seed: u64) -> ForestModel {
    let m = x.ncols();
    let gini = GiniParams {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split.max(2),
        max_features: params
            .max_features
            .unwrap_or_else(|| (m as f64).sqrt().ceil() as usize)
            .clamp(1, m),
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, &["tree", &t.to_string()]));
            let rows = bootstrap(x.nrows(), &mut rng);
            grow_gini(x, y, rows, &gini, &mut rng)
        })
        .collect();
    ForestModel { trees }
}
