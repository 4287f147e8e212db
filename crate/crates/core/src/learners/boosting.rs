use ndarray::ArrayView2;

use super::logistic::sigmoid;
use super::tree::{grow_newton, presort, FlatTree, NewtonParams};

#[derive(Debug, Clone, PartialEq)]
pub struct BoostingParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 damping added to the hessian sum in leaf values and gains.
    pub lambda: f64,
    pub min_child_weight: f64,
}

impl Default for BoostingParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

/// Additive log-odds model started at the training prevalence.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostingModel {
    pub base_score: f64,
    pub trees: Vec<FlatTree>,
}

impl BoostingModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }
}

pub(crate) struct BoostingFit {
    pub model: BoostingModel,
    /// Training log-loss at initialization and after every round.
    pub loss_trace: Vec<f64>,
}

pub(crate) fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &BoostingParams) -> BoostingFit {
    let n = x.nrows();
    let prevalence = y.iter().filter(|&&v| v == 1).count() as f64 / n as f64;
    let base_score = (prevalence / (1.0 - prevalence)).ln();
    let mut margin = vec![base_score; n];
    let sorted = presort(x);
    let newton = NewtonParams {
        max_depth: params.max_depth,
        lambda: params.lambda,
        min_child_weight: params.min_child_weight,
        learning_rate: params.learning_rate,
    };
    let mut trace = vec![log_loss(&margin, y)];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut row = vec![0.0; x.ncols()];
    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(margin[i]);
            grad[i] = p - f64::from(y[i]);
            hess[i] = p * (1.0 - p);
        }
        let tree = grow_newton(x, &sorted, &grad, &hess, &newton);
        for i in 0..n {
            row.iter_mut().zip(x.row(i)).for_each(|(r, v)| *r = *v);
            margin[i] += tree.predict_row(&row);
        }
        trees.push(tree);
        trace.push(log_loss(&margin, y));
    }
    BoostingFit {
        model: BoostingModel { base_score, trees },
        loss_trace: trace,
    }
}

fn log_loss(margin: &[f64], y: &[u8]) -> f64 {
    let total: f64 = margin
        .iter()
        .zip(y)
        .map(|(&z, &yi)| {
            // log(1 + e^z) - y·z
            let sp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            sp - f64::from(yi) * z
        })
        .sum();
    total / margin.len() as f64
}
