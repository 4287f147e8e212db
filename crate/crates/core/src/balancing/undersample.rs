use rand::seq::index;
use rayon::prelude::*;

use super::knn::knn;
use super::{assemble, classes, distance_space, BalancedDataset, BalancerSpec, Method};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Keep every minority row and a uniform sample (without replacement) of
/// majority rows of the same size. Output rows keep their input order.
pub fn random_under(d: &Dataset, seed: u64) -> Result<BalancedDataset> {
    let c = classes(d);
    let mut rng = rng_from_seed(seed);
    let picked = index::sample(&mut rng, c.majority_rows.len(), c.minority_rows.len());
    let mut kept: Vec<usize> = picked.iter().map(|i| c.majority_rows[i]).collect();
    kept.extend_from_slice(&c.minority_rows);
    kept.sort_unstable();
    let spec = BalancerSpec::new(Method::RandomUnder).with_seed(seed);
    assemble(d, &kept, None, &spec, Vec::new())
}

/// NearMiss-1: keep the majority rows whose mean distance to their
/// `near_miss_k` nearest minority rows is smallest, as many as there are
/// minority rows. Ties go to the lower row index.
pub fn near_miss(d: &Dataset, spec: &BalancerSpec) -> Result<BalancedDataset> {
    let c = classes(d);
    let k = spec.near_miss_k;
    if c.minority_rows.len() < k {
        return Err(Error::TooFewRows(format!(
            "near miss needs at least near_miss_k = {k} minority rows, found {}",
            c.minority_rows.len()
        )));
    }
    let space = distance_space(d.features(), spec.standardize);
    let minority = space.select(ndarray::Axis(0), &c.minority_rows);
    let mut scored: Vec<(f64, usize)> = c
        .majority_rows
        .par_iter()
        .map(|&i| {
            let nn = knn(space.row(i), minority.view(), k, None)?;
            let mean = nn.iter().map(|n| n.distance).sum::<f64>() / k as f64;
            Ok((mean, i))
        })
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut kept: Vec<usize> = scored
        .iter()
        .take(c.minority_rows.len())
        .map(|&(_, i)| i)
        .collect();
    kept.extend_from_slice(&c.minority_rows);
    kept.sort_unstable();
    assemble(d, &kept, None, spec, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Source;
    use ndarray::{array, Array2};

    fn toy(x: Array2<f64>, y: Vec<u8>) -> Dataset {
        let names = (0..x.ncols()).map(|j| format!("x{j}")).collect();
        Dataset::new("toy", x, names, y, Source::Derived).unwrap()
    }

    fn eighty_twenty() -> Dataset {
        let x = Array2::from_shape_fn((100, 2), |(i, j)| (i as f64) * 0.37 + j as f64);
        let y = (0..100).map(|i| u8::from(i % 5 == 0)).collect();
        toy(x, y)
    }

    #[test]
    fn random_under_keeps_all_minority_rows() {
        let d = eighty_twenty();
        let b = random_under(&d, 3).unwrap();
        assert_eq!(b.data.class_counts(), [20, 20]);
        let minority_out: Vec<_> = b
            .data
            .features()
            .outer_iter()
            .zip(b.data.target())
            .filter(|(_, &y)| y == 1)
            .map(|(r, _)| r.to_vec())
            .collect();
        let minority_in: Vec<_> = d
            .class_indices(1)
            .iter()
            .map(|&i| d.features().row(i).to_vec())
            .collect();
        assert_eq!(minority_out, minority_in);
        assert!(b.synthetic_mask.iter().all(|m| !m));
        let again = random_under(&d, 3).unwrap();
        assert_eq!(again.data, b.data);
    }

    #[test]
    fn random_under_on_balanced_input_is_identity() {
        let x = Array2::from_shape_fn((10, 1), |(i, _)| i as f64);
        let d = toy(x, (0..10).map(|i| (i % 2) as u8).collect());
        assert_eq!(random_under(&d, 1).unwrap().data.features(), d.features());
    }

    /// Rank every majority row by mean distance to its k nearest minority
    /// rows using a full pairwise table.
    fn near_miss_oracle(d: &Dataset, k: usize) -> Vec<usize> {
        let x = d.features();
        let min: Vec<usize> = d.class_indices(1);
        let maj: Vec<usize> = d.class_indices(0);
        let mut scored: Vec<(f64, usize)> = maj
            .iter()
            .map(|&i| {
                let mut ds: Vec<f64> = min
                    .iter()
                    .map(|&j| {
                        let dx = x[[i, 0]] - x[[j, 0]];
                        let dy = x[[i, 1]] - x[[j, 1]];
                        (dx * dx + dy * dy).sqrt()
                    })
                    .collect();
                ds.sort_by(f64::total_cmp);
                (ds[..k].iter().sum::<f64>() / k as f64, i)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut keep: Vec<usize> = scored[..min.len()].iter().map(|s| s.1).collect();
        keep.sort_unstable();
        keep
    }

    #[test]
    fn near_miss_matches_exhaustive_ranking() {
        let x = array![
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.5, 0.5],
            [3.0, 3.0],
            [-2.0, 0.1],
            [0.9, 1.2],
            [5.0, -1.0],
            [1.5, 0.2]
        ];
        let y = vec![1, 1, 1, 0, 0, 0, 0, 0, 0];
        let d = toy(x, y);
        let b = near_miss(&d, &BalancerSpec::new(Method::NearMiss)).unwrap();
        let expected_rows = near_miss_oracle(&d, 3);
        assert_eq!(expected_rows, vec![3, 6, 8]);
        let kept_majority: Vec<Vec<f64>> = b
            .data
            .features()
            .outer_iter()
            .zip(b.data.target())
            .filter(|(_, &y)| y == 0)
            .map(|(r, _)| r.to_vec())
            .collect();
        let expected: Vec<Vec<f64>> = expected_rows
            .iter()
            .map(|&i| d.features().row(i).to_vec())
            .collect();
        assert_eq!(kept_majority, expected);
    }

    #[test]
    fn near_miss_coincident_majority_keeps_lowest_indices() {
        let x = array![[5.0], [5.0], [5.0], [5.0], [5.0], [0.0], [1.0], [2.0]];
        let y = vec![0, 0, 0, 0, 0, 1, 1, 1];
        let d = toy(x, y);
        let b = near_miss(&d, &BalancerSpec::new(Method::NearMiss)).unwrap();
        assert_eq!(b.data.n_rows(), 6);
        assert_eq!(b.data.target(), &[0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn near_miss_signals_small_minority() {
        let x = Array2::from_shape_fn((6, 1), |(i, _)| i as f64);
        let d = toy(x, vec![0, 0, 0, 0, 1, 1]);
        assert!(matches!(
            near_miss(&d, &BalancerSpec::new(Method::NearMiss)),
            Err(Error::TooFewRows(_))
        ));
    }

    #[test]
    fn near_miss_balanced_input_is_identity() {
        let x = Array2::from_shape_fn((8, 1), |(i, _)| i as f64);
        let d = toy(x, (0..8).map(|i| (i % 2) as u8).collect());
        let b = near_miss(&d, &BalancerSpec::new(Method::NearMiss)).unwrap();
        assert_eq!(b.data.features(), d.features());
    }
}
