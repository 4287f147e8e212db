use ndarray::{ArrayView1, ArrayView2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// Brute-force k nearest neighbors of `query` among the rows of `pool`.
///
/// Euclidean distance, ascending, ties broken by lower row index. `exclude`
/// removes one pool row (the query's own position) from consideration.
pub fn knn(
    query: ArrayView1<'_, f64>,
    pool: ArrayView2<'_, f64>,
    k: usize,
    exclude: Option<usize>,
) -> Result<Vec<Neighbor>> {
    let available = pool.nrows() - usize::from(exclude.is_some_and(|e| e < pool.nrows()));
    if k > available {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the {available} available neighbors"
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut cand: Vec<(f64, usize)> = pool
        .outer_iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, row)| (squared_distance(query, row), i))
        .collect();
    let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, by_key);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_key);
    Ok(cand
        .into_iter()
        .map(|(d2, index)| Neighbor {
            index,
            distance: d2.sqrt(),
        })
        .collect())
}

pub(crate) fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn one_dimensional_example() {
        let pool = array![[0.0], [1.0], [3.0]];
        let nn = knn(array![0.4].view(), pool.view(), 2, None).unwrap();
        assert_eq!(nn.iter().map(|n| n.index).collect::<Vec<_>>(), vec![0, 1]);
        assert!((nn[0].distance - 0.4).abs() < 1e-15);
    }

    #[test]
    fn self_match_and_exclusion() {
        let pool = array![[1.0, 2.0], [3.0, 4.0], [1.5, 2.0]];
        let nn = knn(pool.row(0), pool.view(), 1, None).unwrap();
        assert_eq!(nn[0], Neighbor { index: 0, distance: 0.0 });
        let nn = knn(pool.row(0), pool.view(), 1, Some(0)).unwrap();
        assert_eq!(nn[0].index, 2);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let pool = array![[2.0], [-1.0], [1.0], [-2.0]];
        let nn = knn(array![0.0].view(), pool.view(), 4, None).unwrap();
        assert_eq!(nn.iter().map(|n| n.index).collect::<Vec<_>>(), vec![1, 2, 0, 3]);
    }

    #[test]
    fn too_many_neighbors() {
        let pool = Array2::<f64>::zeros((3, 1));
        assert!(knn(array![0.0].view(), pool.view(), 3, Some(1)).is_err());
        assert_eq!(knn(array![0.0].view(), pool.view(), 2, Some(1)).unwrap().len(), 2);
    }
}
