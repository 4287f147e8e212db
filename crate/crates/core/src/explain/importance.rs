use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{check_background, ImportanceVector};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::Predictor;
use crate::seed::{derive_seed, rng_from_seed};

pub const DEFAULT_VI_REPEATS: usize = 10;

/// Area under the ROC curve via the rank-sum statistic; tied scores share
/// their average rank.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let n1 = labels.iter().filter(|&&y| y == 1).count();
    let n0 = labels.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::SingleClass("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end share their mean
        let mid = (start + 1 + end) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| labels[i] == 1).count();
        rank_sum += mid * positives as f64;
        start = end;
    }
    let (n1, n0) = (n1 as f64, n0 as f64);
    Ok((rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0))
}

/// Increase of `1 - AUC` when one column is shuffled, for each column and
/// each of `repeats` independent shuffles.
///
/// Shuffles act on a canonical row order (rows sorted by value, then
/// label), so reordering the background rows with their labels does not
/// change the result.
pub fn permutation_importance(
    model: &dyn Predictor,
    background: &Dataset,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceVector> {
    check_background(model, background)?;
    if repeats == 0 {
        return Err(Error::InvalidArgument("permutation importance needs at least one repeat".into()));
    }
    let y = background.target();
    let x = background.features();
    let base = auc(&model.predict(x), y)?;

    let mut canonical: Vec<usize> = (0..x.nrows()).collect();
    canonical.sort_by(|&a, &b| {
        x.row(a)
            .iter()
            .zip(x.row(b))
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y[a].cmp(&y[b]))
    });

    let names = background.feature_names();
    let m = names.len();
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|j| (0..repeats).map(move |r| (j, r))).collect();
    let losses: Vec<f64> = cells
        .par_iter()
        .map(|&(j, r)| {
            let mut rng = rng_from_seed(derive_seed(seed, &["permutation", &names[j], &r.to_string()]));
            let mut shuffled = canonical.clone();
            shuffled.shuffle(&mut rng);
            let mut xp = x.to_owned();
            for (&dst, &src) in canonical.iter().zip(&shuffled) {
                xp[[dst, j]] = x[[src, j]];
            }
            let permuted = auc(&model.predict(xp.view()), y)?;
            Ok(base - permuted)
        })
        .collect::<Result<_>>()?;

    let mut raw = Array2::zeros((repeats, m));
    for (&(j, r), &v) in cells.iter().zip(&losses) {
        raw[[r, j]] = v;
    }
    let mean = (0..m)
        .map(|j| raw.column(j).iter().sum::<f64>() / repeats as f64)
        .collect();
    Ok(ImportanceVector {
        model_id: model.model_id(),
        variables: names.to_vec(),
        mean,
        raw,
    })
}
