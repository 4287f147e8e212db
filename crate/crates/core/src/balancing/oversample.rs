use ndarray::{Array2, Axis};
use rand::Rng as _;
use rayon::prelude::*;

use super::knn::knn;
use super::{assemble, classes, distance_space, BalancedDataset, BalancerSpec, Method};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Keep every row and append uniform draws (with replacement) of minority
/// rows until the classes are equal. Duplicates are copies, not synthesis.
pub fn random_over(d: &Dataset, seed: u64) -> Result<BalancedDataset> {
    let c = classes(d);
    let mut rng = rng_from_seed(seed);
    let n_new = c.majority_rows.len() - c.minority_rows.len();
    let mut kept: Vec<usize> = (0..d.n_rows()).collect();
    kept.extend((0..n_new).map(|_| c.minority_rows[rng.random_range(0..c.minority_rows.len())]));
    let spec = BalancerSpec::new(Method::RandomOver).with_seed(seed);
    assemble(d, &kept, None, &spec, Vec::new())
}

/// Interpolation step for synthetic rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    /// u ~ Uniform[0, 1), drawn after the neighbor.
    Uniform,
    /// Fixed u; still consumes no random draw.
    Fixed(f64),
}

/// SMOTE: each synthetic row is `x + u·(x' − x)` for a uniformly drawn
/// minority base `x` and one of its `k_neighbors` nearest minority
/// neighbors `x'`.
///
/// When the minority has fewer than `k_neighbors + 1` rows, k is reduced to
/// `minority − 1` and a warning is recorded.
pub fn smote(d: &Dataset, spec: &BalancerSpec) -> Result<BalancedDataset> {
    smote_with_step(d, spec, Step::Uniform)
}

pub fn smote_with_step(d: &Dataset, spec: &BalancerSpec, step: Step) -> Result<BalancedDataset> {
    let c = classes(d);
    require_two(c.minority_rows.len())?;
    let mut warnings = Vec::new();
    let k = clamp_k(spec.k_neighbors, c.minority_rows.len(), &mut warnings);
    let n_new = c.majority_rows.len() - c.minority_rows.len();
    let synthetic = synthesize(d, spec, &c.minority_rows, &c.minority_rows, k, n_new, step)?;
    let kept: Vec<usize> = (0..d.n_rows()).collect();
    assemble(d, &kept, Some((synthetic.0, c.minority, synthetic.1)), spec, warnings)
}

/// Danger classification of one minority row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Safe,
    Danger,
    Noise,
}

/// Borderline-1 SMOTE: only minority rows whose `m_neighbors` neighborhood
/// (whole data) holds a majority count in `[m/2, m)` serve as bases.
///
/// With no such row the call falls back to plain SMOTE and records a
/// warning.
pub fn borderline_smote(d: &Dataset, spec: &BalancerSpec) -> Result<BalancedDataset> {
    let c = classes(d);
    require_two(c.minority_rows.len())?;
    let mut warnings = Vec::new();
    let regions = danger_regions(d, spec, &mut warnings)?;
    let danger: Vec<usize> = c
        .minority_rows
        .iter()
        .zip(&regions)
        .filter(|(_, r)| **r == Region::Danger)
        .map(|(&i, _)| i)
        .collect();
    if danger.is_empty() {
        let mut out = smote(d, spec)?;
        out.warnings.insert(
            0,
            "borderline_smote: no DANGER rows found, fell back to plain SMOTE".into(),
        );
        out.warnings.extend(warnings);
        return Ok(out);
    }
    let k = clamp_k(spec.k_neighbors, c.minority_rows.len(), &mut warnings);
    let n_new = c.majority_rows.len() - c.minority_rows.len();
    let synthetic = synthesize(d, spec, &c.minority_rows, &danger, k, n_new, Step::Uniform)?;
    let kept: Vec<usize> = (0..d.n_rows()).collect();
    assemble(d, &kept, Some((synthetic.0, c.minority, synthetic.1)), spec, warnings)
}

/// Region of every minority row, in minority-row order.
pub fn danger_regions(d: &Dataset, spec: &BalancerSpec, warnings: &mut Vec<String>) -> Result<Vec<Region>> {
    let c = classes(d);
    let space = distance_space(d.features(), spec.standardize);
    let mut m = spec.m_neighbors;
    if m > d.n_rows() - 1 {
        warnings.push(format!(
            "borderline_smote: m_neighbors reduced from {m} to {}",
            d.n_rows() - 1
        ));
        m = d.n_rows() - 1;
    }
    let y = d.target();
    c.minority_rows
        .par_iter()
        .map(|&i| {
            let nn = knn(space.row(i), space.view(), m, Some(i))?;
            let n_major = nn.iter().filter(|n| y[n.index] != c.minority).count();
            Ok(if n_major == m {
                Region::Noise
            } else if 2 * n_major >= m {
                Region::Danger
            } else {
                Region::Safe
            })
        })
        .collect()
}

fn require_two(minority: usize) -> Result<()> {
    if minority < 2 {
        return Err(Error::TooFewRows(format!(
            "SMOTE needs at least 2 minority rows, found {minority}"
        )));
    }
    Ok(())
}

fn clamp_k(k: usize, minority: usize, warnings: &mut Vec<String>) -> usize {
    if minority - 1 < k {
        warnings.push(format!(
            "k_neighbors reduced from {k} to {} (minority has {minority} rows)",
            minority - 1
        ));
        minority - 1
    } else {
        k
    }
}

/// Draw `n_new` synthetic rows. Per row the draw order is base, neighbor,
/// then the interpolation step.
fn synthesize(
    d: &Dataset,
    spec: &BalancerSpec,
    minority_rows: &[usize],
    bases: &[usize],
    k: usize,
    n_new: usize,
    step: Step,
) -> Result<(Array2<f64>, Vec<(usize, usize)>)> {
    let x = d.features();
    let space = distance_space(x, spec.standardize);
    let minority = space.select(Axis(0), minority_rows);
    let position: std::collections::HashMap<usize, usize> =
        minority_rows.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let neighbors: Vec<Vec<usize>> = bases
        .par_iter()
        .map(|&b| {
            let nn = knn(space.row(b), minority.view(), k, Some(position[&b]))?;
            Ok(nn.into_iter().map(|n| minority_rows[n.index]).collect())
        })
        .collect::<Result<_>>()?;

    let mut rng = rng_from_seed(spec.seed);
    let mut out = Array2::zeros((n_new, d.n_cols()));
    let mut parents = Vec::with_capacity(n_new);
    for mut row in out.outer_iter_mut() {
        let b = rng.random_range(0..bases.len());
        let nb = neighbors[b][rng.random_range(0..k)];
        let u = match step {
            Step::Uniform => rng.random::<f64>(),
            Step::Fixed(u) => u,
        };
        let base = x.row(bases[b]);
        let other = x.row(nb);
        for ((o, &xb), &xn) in row.iter_mut().zip(base.iter()).zip(other.iter()) {
            *o = xb + u * (xn - xb);
        }
        parents.push((bases[b], nb));
    }
    Ok((out, parents))
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

    fn imbalanced() -> Dataset {
        let x = Array2::from_shape_fn((60, 2), |(i, j)| ((i * 7 + j * 13) % 17) as f64 + 0.1 * i as f64);
        let y = (0..60).map(|i| u8::from(i % 6 == 0)).collect();
        toy(x, y)
    }

    #[test]
    fn random_over_duplicates_minority() {
        let d = imbalanced();
        let b = random_over(&d, 5).unwrap();
        assert_eq!(b.data.class_counts(), [50, 50]);
        let x = b.data.features();
        assert_eq!(x.slice(ndarray::s![..60, ..]), d.features());
        for i in 60..100 {
            assert_eq!(b.data.target()[i], 1);
            assert!(d
                .class_indices(1)
                .iter()
                .any(|&j| d.features().row(j) == x.row(i)));
        }
        assert!(b.synthetic_mask.iter().all(|m| !m));
    }

    #[test]
    fn random_over_single_minority_row() {
        let x = Array2::from_shape_fn((61, 1), |(i, _)| i as f64);
        let mut y = vec![0u8; 60];
        y.push(1);
        let b = random_over(&toy(x, y), 1).unwrap();
        assert_eq!(b.data.class_counts(), [60, 60]);
        assert!((61..120).all(|i| b.data.features()[[i, 0]] == 60.0));
    }

    #[test]
    fn smote_rows_lie_on_segments() {
        let d = imbalanced();
        let b = smote(&d, &BalancerSpec::new(Method::Smote).with_seed(9)).unwrap();
        assert_eq!(b.data.class_counts(), [50, 50]);
        let x = b.data.features();
        let src = d.features();
        for (i, p) in b.parents.iter().enumerate() {
            let Some((base, nb)) = *p else {
                assert!(!b.synthetic_mask[i]);
                continue;
            };
            let (xb, xn) = (src.row(base), src.row(nb));
            let mut u: Option<f64> = None;
            for j in 0..2 {
                let span = xn[j] - xb[j];
                if span.abs() > 1e-12 {
                    let uj = (x[[i, j]] - xb[j]) / span;
                    assert!((-1e-12..=1.0 + 1e-12).contains(&uj));
                    if let Some(u0) = u {
                        assert!((uj - u0).abs() < 1e-9);
                    }
                    u = Some(uj);
                } else {
                    assert!((x[[i, j]] - xb[j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_step_copies_bases() {
        let d = imbalanced();
        let b = smote_with_step(&d, &BalancerSpec::new(Method::Smote), Step::Fixed(0.0)).unwrap();
        for (i, p) in b.parents.iter().enumerate() {
            if let Some((base, _)) = p {
                assert_eq!(b.data.features().row(i), d.features().row(*base));
            }
        }
    }

    #[test]
    fn small_minority_clamps_k() {
        let x = Array2::from_shape_fn((23, 1), |(i, _)| i as f64);
        let mut y = vec![0u8; 20];
        y.extend([1, 1, 1]);
        let b = smote(&toy(x, y), &BalancerSpec::new(Method::Smote)).unwrap();
        assert_eq!(b.data.class_counts(), [20, 20]);
        assert_eq!(b.warnings.len(), 1);
        let x = Array2::from_shape_fn((5, 1), |(i, _)| i as f64);
        assert!(smote(&toy(x, vec![0, 0, 0, 0, 1]), &BalancerSpec::new(Method::Smote)).is_err());
    }

    /// Minority cluster near 0, one minority point (row 5) planted next to
    /// a few majority points at 5.1..5.3, remaining majority near 10.
    fn borderline_toy() -> Dataset {
        let mut v = vec![0.0, 0.1, 0.2, 0.3, 0.4, 5.0, 5.1, 5.2, 5.3];
        v.extend((0..9).map(|i| 10.0 + 0.1 * i as f64));
        let x = Array2::from_shape_vec((v.len(), 1), v).unwrap();
        let mut y = vec![1u8; 6];
        y.extend(vec![0u8; 12]);
        toy(x, y)
    }

    /// Exhaustive neighborhood census, independent of `knn`.
    fn region_oracle(d: &Dataset, m: usize) -> Vec<Region> {
        let x = d.features();
        let y = d.target();
        d.class_indices(1)
            .iter()
            .map(|&i| {
                let mut all: Vec<(f64, usize)> = (0..d.n_rows())
                    .filter(|&j| j != i)
                    .map(|j| {
                        let dd: f64 = (0..x.ncols()).map(|c| (x[[i, c]] - x[[j, c]]).powi(2)).sum();
                        (dd, j)
                    })
                    .collect();
                all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let maj = all[..m].iter().filter(|(_, j)| y[*j] == 0).count();
                if maj == m {
                    Region::Noise
                } else if maj * 2 >= m {
                    Region::Danger
                } else {
                    Region::Safe
                }
            })
            .collect()
    }

    #[test]
    fn borderline_uses_only_danger_bases() {
        let d = borderline_toy();
        let mut spec = BalancerSpec::new(Method::BorderlineSmote).with_seed(2);
        spec.k_neighbors = 3;
        spec.m_neighbors = 4;
        let regions = danger_regions(&d, &spec, &mut Vec::new()).unwrap();
        let oracle = region_oracle(&d, 4);
        assert_eq!(regions, oracle);
        assert_eq!(oracle.iter().filter(|r| **r == Region::Danger).count(), 1);
        assert_eq!(oracle[5], Region::Danger);
        assert_eq!(oracle[0], Region::Safe);

        let b = borderline_smote(&d, &spec).unwrap();
        assert_eq!(b.data.class_counts(), [12, 12]);
        let bases: Vec<usize> = b.parents.iter().flatten().map(|p| p.0).collect();
        assert_eq!(bases.len(), 6);
        assert!(bases.iter().all(|&i| i == 5));
        assert!(b.warnings.is_empty());
    }

    #[test]
    fn borderline_ignores_noise_and_falls_back() {
        // Minority row 0 sits inside the majority: NOISE. Rows 1..3 are
        // SAFE. No DANGER rows -> plain SMOTE with a warning.
        let x = array![
            [10.0, 10.0],
            [0.0, 0.0],
            [0.1, 0.0],
            [0.0, 0.1],
            [10.1, 10.0],
            [10.0, 10.1],
            [9.9, 10.0],
            [10.0, 9.9],
            [10.1, 10.1],
            [9.9, 9.9]
        ];
        let mut y = vec![1u8; 4];
        y.extend(vec![0u8; 6]);
        let d = toy(x, y);
        let mut spec = BalancerSpec::new(Method::BorderlineSmote);
        spec.k_neighbors = 2;
        spec.m_neighbors = 3;
        let regions = danger_regions(&d, &spec, &mut Vec::new()).unwrap();
        assert_eq!(regions, vec![Region::Noise, Region::Safe, Region::Safe, Region::Safe]);
        let b = borderline_smote(&d, &spec).unwrap();
        assert!(b.warnings[0].contains("fell back"));
        assert_eq!(b.data.class_counts(), [6, 6]);
    }
}
