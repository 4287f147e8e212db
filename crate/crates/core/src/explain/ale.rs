use rayon::prelude::*;

use super::{background_id, check_background, Grid, GridConstruction, Profile, ProfileKind};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::Predictor;

pub const DEFAULT_ALE_BINS: usize = 20;

/// Accumulated local effects at quantile bin edges.
///
/// Edges are the column minimum followed by the order statistics at
/// `⌈n·b/K⌉` for `b = 1..K`, with repeats dropped, so every bin holds at
/// least one row. A row with value `x` falls in the first bin whose upper
/// edge is `≥ x`. The curve is centered so that, interpolated linearly at
/// each background value, it averages to zero over the background.
pub fn ale(model: &dyn Predictor, background: &Dataset, variable: &str, n_bins: usize) -> Result<Profile> {
    check_background(model, background)?;
    if n_bins == 0 {
        return Err(Error::InvalidArgument("ALE needs at least one bin".into()));
    }
    let j = background.column_index(variable)?;
    let col = background.column(j).to_vec();
    let edges = bin_edges(&col, n_bins);
    let mut warnings = Vec::new();
    let profile = |points: Vec<f64>, values: Vec<f64>, warnings: Vec<String>| Profile {
        kind: ProfileKind::Ale,
        variable: variable.to_string(),
        grid: Grid { variable: variable.to_string(), points, construction: GridConstruction::Quantile },
        values,
        model_id: model.model_id(),
        background_id: background_id(background),
        warnings,
    };
    if edges.len() < 2 {
        warnings.push(format!("ale: `{variable}` is constant, profile is flat zero"));
        return Ok(profile(edges, vec![0.0], warnings));
    }
    let k = edges.len() - 1;
    if k < n_bins {
        warnings.push(format!(
            "ale: `{variable}` has too few distinct values for {n_bins} bins, using {k}"
        ));
    }

    let bin_of: Vec<usize> = col.iter().map(|&v| bin_index(&edges, v)).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &b) in bin_of.iter().enumerate() {
        members[b].push(i);
    }
    let x = background.features();
    let effects: Vec<f64> = members
        .par_iter()
        .enumerate()
        .map(|(b, rows)| {
            let mut lo = x.select(ndarray::Axis(0), rows);
            let mut hi = lo.clone();
            lo.column_mut(j).fill(edges[b]);
            hi.column_mut(j).fill(edges[b + 1]);
            let f_lo = model.predict(lo.view());
            let f_hi = model.predict(hi.view());
            let total: f64 = f_hi.iter().zip(&f_lo).map(|(h, l)| h - l).sum();
            total / rows.len() as f64
        })
        .collect();

    let mut acc = Vec::with_capacity(k + 1);
    acc.push(0.0);
    for e in &effects {
        acc.push(acc.last().unwrap() + e);
    }
    let n = col.len() as f64;
    let shift = col
        .iter()
        .zip(&bin_of)
        .map(|(&v, &b)| interpolate(&edges, &acc, b, v))
        .sum::<f64>()
        / n;
    let values = acc.iter().map(|a| a - shift).collect();
    Ok(profile(edges, values, warnings))
}

fn bin_edges(col: &[f64], n_bins: usize) -> Vec<f64> {
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges = vec![sorted[0]];
    for b in 1..=n_bins {
        let rank = (n * b).div_ceil(n_bins);
        edges.push(sorted[rank.max(1) - 1]);
    }
    edges.dedup();
    edges
}

/// Bin `b` covers `(edges[b], edges[b+1]]`; the minimum goes to bin 0.
fn bin_index(edges: &[f64], v: f64) -> usize {
    let k = edges.len() - 1;
    let upper = edges[1..].partition_point(|&e| e < v);
    upper.min(k - 1)
}

pub(crate) fn interpolate(edges: &[f64], acc: &[f64], b: usize, v: f64) -> f64 {
    let (lo, hi) = (edges[b], edges[b + 1]);
    let t = (v - lo) / (hi - lo);
    acc[b] + t * (acc[b + 1] - acc[b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Source;
    use crate::explain::pdp;
    use crate::learners::{train, Family, FnPredictor, LearnerSpec, RawScore, TrainedModel};
    use ndarray::Array2;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    fn dataset(x: Array2<f64>) -> Dataset {
        let n = x.nrows();
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        let y = (0..n).map(|i| u8::from(x[[i, 0]] > 0.0 || i == 0) * u8::from(i != 1)).collect();
        Dataset::new("bg", x, names, y, Source::Derived).unwrap()
    }

    fn gaussian(n: usize, m: usize, seed: u64) -> Dataset {
        let mut rng = crate::seed::rng_from_seed(seed);
        dataset(Array2::from_shape_fn((n, m), |_| rng.sample::<f64, _>(StandardNormal)))
    }

    /// Centered ALE at each background value, interpolated between edges.
    fn at_rows(p: &Profile, col: &[f64]) -> Vec<f64> {
        col.iter()
            .map(|&v| {
                let b = bin_index(&p.grid.points, v);
                interpolate(&p.grid.points, &p.values, b, v)
            })
            .collect()
    }

    /// Direct evaluation of the estimator sum with hard bin weights: for
    /// each edge, add the mean difference across each bin below it.
    fn literal(model: &dyn Predictor, d: &Dataset, j: usize, edges: &[f64]) -> Vec<f64> {
        let x = d.features();
        let k = edges.len() - 1;
        let mut uncentered = vec![0.0; k + 1];
        for top in 1..=k {
            let mut total = 0.0;
            for b in 1..=top {
                let (mut sum, mut count) = (0.0, 0usize);
                for i in 0..d.n_rows() {
                    let v = x[[i, j]];
                    let inside = if b == 1 { v <= edges[1] } else { v > edges[b - 1] && v <= edges[b] };
                    if !inside {
                        continue;
                    }
                    let mut up = x.row(i).to_owned();
                    let mut down = up.clone();
                    up[j] = edges[b];
                    down[j] = edges[b - 1];
                    let pair = ndarray::stack(ndarray::Axis(0), &[up.view(), down.view()]).unwrap();
                    let f = model.predict(pair.view());
                    sum += f[0] - f[1];
                    count += 1;
                }
                total += sum / count as f64;
            }
            uncentered[top] = total;
        }
        let col = d.column(j).to_vec();
        let c = col
            .iter()
            .map(|&v| {
                let b = bin_index(edges, v);
                interpolate(edges, &uncentered, b, v)
            })
            .sum::<f64>()
            / col.len() as f64;
        uncentered.iter().map(|u| u - c).collect()
    }

    #[test]
    fn additive_raw_score_is_linear_and_centered() {
        let bg = gaussian(500, 2, 1);
        let m = TrainedModel::from_logistic_coefficients(vec!["x1".into(), "x2".into()], 0.4, vec![2.0, 3.0]).unwrap();
        let p = ale(&RawScore(&m), &bg, "x1", 20).unwrap();
        let mean_x1 = bg.column(0).sum() / 500.0;
        for (z, v) in p.grid.points.iter().zip(&p.values) {
            assert!((v - 2.0 * (z - mean_x1)).abs() < 1e-9, "{z}: {v}");
        }
        let pd = pdp(&RawScore(&m), &bg, &p.grid).unwrap();
        let offset = pd.values[0] - p.values[0];
        for (a, b) in p.values.iter().zip(&pd.values) {
            assert!((b - a - offset).abs() < 1e-6);
        }
    }

    #[test]
    fn centering_holds_for_trained_models() {
        let bg = gaussian(300, 3, 2);
        for family in Family::ALL {
            let spec = LearnerSpec::with_defaults(family, 1);
            let m = train(&spec, &bg).unwrap();
            for var in ["x1", "x2", "x3"] {
                let p = ale(&m, &bg, var, 20).unwrap();
                let col = bg.column(bg.column_index(var).unwrap()).to_vec();
                let total: f64 = at_rows(&p, &col).iter().sum();
                assert!(total.abs() < 1e-9, "{family} {var}: {total}");
            }
        }
    }

    #[test]
    fn matches_literal_sum_on_correlated_interaction() {
        let mut rng = crate::seed::rng_from_seed(3);
        let mut x = Array2::zeros((120, 2));
        for i in 0..120 {
            let a: f64 = rng.sample(StandardNormal);
            let e: f64 = rng.sample(StandardNormal);
            x[[i, 0]] = a;
            x[[i, 1]] = 0.95 * a + 0.1 * e;
        }
        let bg = dataset(x);

        let only_x1 = FnPredictor { n_features: 2, id: "a".into(), f: |r: &[f64]| r[0].sin() + r[0] };
        let flat = ale(&only_x1, &bg, "x2", 10).unwrap();
        assert!(flat.values.iter().all(|v| v.abs() < 1e-12));
        let pd = pdp(&only_x1, &bg, &flat.grid).unwrap();
        assert!(pd.values.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));

        let interaction = FnPredictor { n_features: 2, id: "b".into(), f: |r: &[f64]| r[0] * r[1] };
        let a = ale(&interaction, &bg, "x2", 10).unwrap();
        let expected = literal(&interaction, &bg, 1, &a.grid.points);
        for (u, v) in a.values.iter().zip(&expected) {
            assert!((u - v).abs() < 1e-12);
        }
        let p = pdp(&interaction, &bg, &a.grid).unwrap();
        let offset = p.values[0] - a.values[0];
        let gap = a.values.iter().zip(&p.values).map(|(x, y)| (y - x - offset).abs()).fold(0.0, f64::max);
        assert!(gap > 0.1, "ALE and PDP should disagree under interaction, gap {gap}");
    }

    #[test]
    fn constant_variable_gives_flat_zero_with_warning() {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| if j == 1 { 4.0 } else { i as f64 });
        let bg = dataset(x);
        let f = FnPredictor { n_features: 2, id: "c".into(), f: |r: &[f64]| r[0] + r[1] };
        let p = ale(&f, &bg, "x2", 5).unwrap();
        assert_eq!(p.values, vec![0.0]);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn few_distinct_values_collapse_bins() {
        let x = Array2::from_shape_fn((40, 1), |(i, _)| (i % 3) as f64);
        let bg = dataset(x);
        let f = FnPredictor { n_features: 1, id: "c".into(), f: |r: &[f64]| r[0] * r[0] };
        let p = ale(&f, &bg, "x1", 20).unwrap();
        assert_eq!(p.grid.points, vec![0.0, 1.0, 2.0]);
        assert!(!p.warnings.is_empty());
    }

    #[test]
    fn background_is_not_mutated() {
        let bg = gaussian(60, 2, 9);
        let before = bg.checksum();
        let f = FnPredictor { n_features: 2, id: "c".into(), f: |r: &[f64]| r[0] * r[1] };
        ale(&f, &bg, "x1", 8).unwrap();
        assert_eq!(bg.checksum(), before);
    }

    proptest::proptest! {
        #[test]
        fn every_bin_is_populated(values in proptest::collection::vec(-50i32..50, 2..80), bins in 1usize..30) {
            let col: Vec<f64> = values.iter().map(|&v| f64::from(v) / 4.0).collect();
            let edges = bin_edges(&col, bins);
            if edges.len() >= 2 {
                let mut counts = vec![0usize; edges.len() - 1];
                for &v in &col {
                    counts[bin_index(&edges, v)] += 1;
                }
                proptest::prop_assert!(counts.iter().all(|&c| c > 0));
            }
        }
    }
}
