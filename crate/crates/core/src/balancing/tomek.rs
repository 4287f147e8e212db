use ndarray::ArrayView2;
use rayon::prelude::*;

use super::knn::knn;
use super::{smote, BalancedDataset, BalancerSpec};
use crate::data::Dataset;
use crate::error::Result;

/// Pairs `(i, j)`, `i < j`, of opposite-class rows that are each other's
/// single nearest neighbor (ties to the lower index).
pub fn tomek_links(x: ArrayView2<'_, f64>, y: &[u8]) -> Result<Vec<(usize, usize)>> {
    if x.nrows() < 2 {
        return Ok(Vec::new());
    }
    let nearest: Vec<usize> = (0..x.nrows())
        .into_par_iter()
        .map(|i| Ok(knn(x.row(i), x, 1, Some(i))?[0].index))
        .collect::<Result<_>>()?;
    Ok(nearest
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < j && nearest[j] == i && y[i] != y[j])
        .map(|(i, &j)| (i, j))
        .collect())
}

/// SMOTE followed by removal of both members of every Tomek link.
///
/// Each link joins one row of each class, so the classes stay equal.
pub fn smote_tomek(d: &Dataset, spec: &BalancerSpec) -> Result<BalancedDataset> {
    let over = smote(d, spec)?;
    let space = distance_space_like(d, &over, spec.standardize);
    let links = tomek_links(space.view(), over.data.target())?;
    if links.is_empty() {
        return Ok(over);
    }
    let mut drop = vec![false; over.data.n_rows()];
    for &(i, j) in &links {
        drop[i] = true;
        drop[j] = true;
    }
    let kept: Vec<usize> = (0..drop.len()).filter(|&i| !drop[i]).collect();
    let data = over.data.select_rows(&kept, over.data.name().to_string())?;
    Ok(BalancedDataset {
        data,
        origin: over.origin,
        spec: over.spec,
        synthetic_mask: kept.iter().map(|&i| over.synthetic_mask[i]).collect(),
        parents: kept.iter().map(|&i| over.parents[i]).collect(),
        links_removed: 2 * links.len(),
        warnings: over.warnings,
    })
}

/// Distances for the Tomek pass use the input's standardization so
/// synthetic rows are measured on the same scale as the originals.
fn distance_space_like(
    original: &Dataset,
    balanced: &BalancedDataset,
    standardize: bool,
) -> ndarray::Array2<f64> {
    if !standardize {
        return balanced.data.features().to_owned();
    }
    let x = original.features();
    let n = x.nrows() as f64;
    let mut out = balanced.data.features().to_owned();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        let src = x.column(j);
        let mean = src.sum() / n;
        let sd = (src.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let scale = if sd > 0.0 { sd } else { 1.0 };
        col.mapv_inplace(|v| (v - mean) / scale);
    }
    out
}
