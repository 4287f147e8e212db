//! Binary decision trees stored as flat arrays.
//!
//! A row goes left when `x[feature] <= threshold`. Thresholds sit at
//! midpoints between consecutive distinct sorted values. Among equally good
//! splits the lowest feature index wins, then the lowest threshold.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::seed::Rng;

pub(crate) const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlatTree {
    pub feature: Vec<u32>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub value: Vec<f64>,
}

impl FlatTree {
    pub fn n_nodes(&self) -> usize {
        self.feature.len()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut n = 0usize;
        loop {
            let f = self.feature[n];
            if f == LEAF {
                return self.value[n];
            }
            n = if row[f as usize] <= self.threshold[n] {
                self.left[n]
            } else {
                self.right[n]
            } as usize;
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &FlatTree, n: usize) -> usize {
            if t.feature[n] == LEAF {
                0
            } else {
                1 + walk(t, t.left[n] as usize).max(walk(t, t.right[n] as usize))
            }
        }
        if self.feature.is_empty() {
            0
        } else {
            walk(self, 0)
        }
    }

    fn push_leaf(&mut self, value: f64) -> usize {
        self.feature.push(LEAF);
        self.threshold.push(0.0);
        self.left.push(LEAF);
        self.right.push(LEAF);
        self.value.push(value);
        self.feature.len() - 1
    }

    fn make_split(&mut self, node: usize, feature: usize, threshold: f64, left: usize, right: usize) {
        self.feature[node] = feature as u32;
        self.threshold[node] = threshold;
        self.left[node] = left as u32;
        self.right[node] = right as u32;
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // Guard against rounding onto the upper value for adjacent floats.
    if m >= b {
        a
    } else {
        m
    }
}

pub(crate) struct GiniParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: usize,
}

/// Grow an unpruned classification tree on `rows` (a bootstrap sample, may
/// contain repeats). Leaves hold the class-1 fraction of their samples.
pub(crate) fn grow_gini(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    rows: Vec<usize>,
    params: &GiniParams,
    rng: &mut Rng,
) -> FlatTree {
    let m = x.ncols();
    let mut tree = FlatTree::default();
    let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    let root = tree.push_leaf(0.0);
    stack.push((root, rows, 0));
    let mut features: Vec<usize> = (0..m).collect();
    let mut scratch: Vec<(f64, u8)> = Vec::new();

    while let Some((node, idx, depth)) = stack.pop() {
        let n = idx.len();
        let ones = idx.iter().filter(|&&i| y[i] == 1).count();
        tree.value[node] = ones as f64 / n as f64;
        let depth_ok = params.max_depth.is_none_or(|d| depth < d);
        if ones == 0 || ones == n || n < params.min_samples_split || !depth_ok {
            continue;
        }

        features.shuffle(rng);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut evaluated = 0;
        while evaluated < m {
            let batch_end = if evaluated == 0 {
                params.max_features.min(m)
            } else {
                m
            };
            let mut batch: Vec<usize> = features[evaluated..batch_end].to_vec();
            batch.sort_unstable();
            for &f in &batch {
                if let Some((score, thr)) = best_gini_split(x, y, &idx, f, &mut scratch) {
                    let better = match best {
                        None => true,
                        Some((s, bf, bt)) => {
                            score < s || (score == s && (f < bf || (f == bf && thr < bt)))
                        }
                    };
                    if better {
                        best = Some((score, f, thr));
                    }
                }
            }
            evaluated = batch_end;
            if best.is_some() {
                break;
            }
        }
        let Some((_, f, thr)) = best else { continue };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| x[[i, f]] <= thr);
        let li = tree.push_leaf(0.0);
        let ri = tree.push_leaf(0.0);
        tree.make_split(node, f, thr, li, ri);
        stack.push((ri, r, depth + 1));
        stack.push((li, l, depth + 1));
    }
    tree
}

/// Best split of `idx` on feature `f` by summed child Gini impurity
/// (weighted by child size). Returns `(score, threshold)`.
fn best_gini_split(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    idx: &[usize],
    f: usize,
    scratch: &mut Vec<(f64, u8)>,
) -> Option<(f64, f64)> {
    scratch.clear();
    scratch.extend(idx.iter().map(|&i| (x[[i, f]], y[i])));
    scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let n = scratch.len();
    let total_ones = scratch.iter().filter(|p| p.1 == 1).count() as f64;
    let mut left_ones = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for t in 0..n - 1 {
        left_ones += f64::from(scratch[t].1);
        if scratch[t].0 == scratch[t + 1].0 {
            continue;
        }
        let nl = (t + 1) as f64;
        let nr = (n - t - 1) as f64;
        let right_ones = total_ones - left_ones;
        let score = 2.0 * left_ones * (nl - left_ones) / nl + 2.0 * right_ones * (nr - right_ones) / nr;
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, midpoint(scratch[t].0, scratch[t + 1].0)));
        }
    }
    best
}

pub(crate) struct NewtonParams {
    pub max_depth: usize,
    pub lambda: f64,
    pub min_child_weight: f64,
    pub learning_rate: f64,
}

/// Grow a depth-limited regression tree on gradient/hessian statistics by
/// exact greedy search, level by level over presorted feature orders.
/// Leaf values are `-learning_rate · G / (H + λ)`.
pub(crate) fn grow_newton(
    x: ArrayView2<'_, f64>,
    sorted: &[Vec<usize>],
    grad: &[f64],
    hess: &[f64],
    params: &NewtonParams,
) -> FlatTree {
    let n = x.nrows();
    let m = x.ncols();
    let mut tree = FlatTree::default();
    let root = tree.push_leaf(0.0);
    // node_of[i] = index into `open` of the row's current node, or NONE.
    const NONE: usize = usize::MAX;
    let mut node_of = vec![0usize; n];
    let mut open: Vec<(usize, f64, f64)> = vec![(root, grad.iter().sum(), hess.iter().sum())];

    let leaf_value = |g: f64, h: f64| -params.learning_rate * g / (h + params.lambda);
    let score = |g: f64, h: f64| g * g / (h + params.lambda);

    for _depth in 0..params.max_depth {
        if open.is_empty() {
            break;
        }
        // (gain, feature, threshold, left G, left H)
        let mut best: Vec<Option<(f64, usize, f64, f64, f64)>> = vec![None; open.len()];
        let mut run_g = vec![0.0; open.len()];
        let mut run_h = vec![0.0; open.len()];
        let mut last: Vec<Option<f64>> = vec![None; open.len()];
        for f in 0..m {
            run_g.iter_mut().for_each(|v| *v = 0.0);
            run_h.iter_mut().for_each(|v| *v = 0.0);
            last.iter_mut().for_each(|v| *v = None);
            for &i in &sorted[f] {
                let k = node_of[i];
                if k == NONE {
                    continue;
                }
                let v = x[[i, f]];
                if let Some(prev) = last[k] {
                    if v > prev {
                        let (_, g, h) = open[k];
                        let (gl, hl) = (run_g[k], run_h[k]);
                        let (gr, hr) = (g - gl, h - hl);
                        if hl >= params.min_child_weight && hr >= params.min_child_weight {
                            let gain = score(gl, hl) + score(gr, hr) - score(g, h);
                            if gain > 0.0 && best[k].is_none_or(|b| gain > b.0) {
                                best[k] = Some((gain, f, midpoint(prev, v), gl, hl));
                            }
                        }
                    }
                }
                run_g[k] += grad[i];
                run_h[k] += hess[i];
                last[k] = Some(v);
            }
        }

        let mut next_open = Vec::new();
        let mut remap = vec![NONE; 2 * open.len()];
        for (k, &(node, g, h)) in open.iter().enumerate() {
            match best[k] {
                Some((_, f, thr, gl, hl)) => {
                    let li = tree.push_leaf(0.0);
                    let ri = tree.push_leaf(0.0);
                    tree.make_split(node, f, thr, li, ri);
                    remap[2 * k] = next_open.len();
                    next_open.push((li, gl, hl));
                    remap[2 * k + 1] = next_open.len();
                    next_open.push((ri, g - gl, h - hl));
                }
                None => tree.value[node] = leaf_value(g, h),
            }
        }
        for i in 0..n {
            let k = node_of[i];
            if k == NONE {
                continue;
            }
            node_of[i] = match best[k] {
                Some((_, f, thr, _, _)) => {
                    if x[[i, f]] <= thr {
                        remap[2 * k]
                    } else {
                        remap[2 * k + 1]
                    }
                }
                None => NONE,
            };
        }
        open = next_open;
    }
    for &(node, g, h) in &open {
        tree.value[node] = leaf_value(g, h);
    }
    tree
}

/// Row indices sorted by each feature (stable, so ties keep row order).
pub(crate) fn presort(x: ArrayView2<'_, f64>) -> Vec<Vec<usize>> {
    (0..x.ncols())
        .map(|f| {
            let mut idx: Vec<usize> = (0..x.nrows()).collect();
            idx.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]));
            idx
        })
        .collect()
}

pub(crate) fn bootstrap(n: usize, rng: &mut Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}
