//! L2-penalized logistic regression on internally standardized features.
//!
//! Objective: mean negative log-likelihood + (λ/2)·‖w‖², intercept not
//! penalized. Minimized by L-BFGS with an Armijo backtracking line search,
//! so the recorded objective never increases.

use std::collections::VecDeque;

use ndarray::ArrayView2;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_iter: 1000,
            tol: 1e-6,
        }
    }
}

/// Fitted state. `weights` act on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub intercept: f64,
    pub weights: Vec<f64>,
}

pub(crate) struct LogisticFit {
    pub model: LogisticModel,
    pub loss_trace: Vec<f64>,
    pub converged: bool,
}

const HISTORY: usize = 10;

impl LogisticModel {
    /// Model on raw features: `logit = intercept + Σ coef·x`.
    pub fn from_coefficients(intercept: f64, coefficients: Vec<f64>) -> Self {
        let m = coefficients.len();
        Self {
            means: vec![0.0; m],
            scales: vec![1.0; m],
            intercept,
            weights: coefficients,
        }
    }

    /// Intercept and slopes on the raw feature scale.
    pub fn raw_coefficients(&self) -> (f64, Vec<f64>) {
        let coefs: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.scales)
            .map(|(w, s)| w / s)
            .collect();
        let shift: f64 = coefs.iter().zip(&self.means).map(|(c, m)| c * m).sum();
        (self.intercept - shift, coefs)
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        let mut z = self.intercept;
        for (j, v) in row.iter().enumerate() {
            z += self.weights[j] * (v - self.means[j]) / self.scales[j];
        }
        z
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &LogisticParams) -> LogisticFit {
    let (n, m) = x.dim();
    let mut means = vec![0.0; m];
    let mut scales = vec![1.0; m];
    for j in 0..m {
        let col = x.column(j);
        let mean = col.sum() / n as f64;
        let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        means[j] = mean;
        scales[j] = if sd > 0.0 { sd } else { 1.0 };
    }
    let z: Vec<f64> = x
        .outer_iter()
        .flat_map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, v)| (v - means[j]) / scales[j])
                .collect::<Vec<_>>()
        })
        .collect();
    let problem = Problem {
        z: &z,
        y,
        n,
        m,
        l2: params.l2,
    };

    // theta = [intercept, w_1..w_m]
    let mut theta = vec![0.0; m + 1];
    let (mut loss, mut grad) = problem.eval(&theta);
    let mut trace = vec![loss];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = max_abs(&grad) < params.tol;

    for _ in 0..params.max_iter {
        if converged {
            break;
        }
        let dir = two_loop(&grad, &history);
        let slope = dot(&grad, &dir);
        let (dir, slope) = if slope < 0.0 {
            (dir, slope)
        } else {
            history.clear();
            let d: Vec<f64> = grad.iter().map(|g| -g).collect();
            let s = -dot(&grad, &grad);
            (d, s)
        };
        let mut step = if history.is_empty() {
            1.0 / max_abs(&grad).max(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let (l, g) = problem.eval(&cand);
            if l <= loss + 1e-4 * step * slope {
                accepted = Some((cand, l, g));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_loss, next_grad)) = accepted else {
            // No decrease representable at this precision.
            converged = true;
            break;
        };
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        theta = next;
        loss = next_loss;
        grad = next_grad;
        trace.push(loss);
        converged = max_abs(&grad) < params.tol;
    }

    LogisticFit {
        model: LogisticModel {
            means,
            scales,
            intercept: theta[0],
            weights: theta[1..].to_vec(),
        },
        loss_trace: trace,
        converged,
    }
}

struct Problem<'a> {
    z: &'a [f64],
    y: &'a [u8],
    n: usize,
    m: usize,
    l2: f64,
}

impl Problem<'_> {
    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let mut loss = 0.0;
        let mut grad = vec![0.0; self.m + 1];
        for i in 0..self.n {
            let row = &self.z[i * self.m..(i + 1) * self.m];
            let mut s = theta[0];
            for j in 0..self.m {
                s += theta[j + 1] * row[j];
            }
            let yi = f64::from(self.y[i]);
            loss += softplus(s) - yi * s;
            let r = sigmoid(s) - yi;
            grad[0] += r;
            for j in 0..self.m {
                grad[j + 1] += r * row[j];
            }
        }
        let inv_n = 1.0 / self.n as f64;
        loss *= inv_n;
        grad.iter_mut().for_each(|g| *g *= inv_n);
        for j in 0..self.m {
            loss += 0.5 * self.l2 * theta[j + 1] * theta[j + 1];
            grad[j + 1] += self.l2 * theta[j + 1];
        }
        (loss, grad)
    }
}

fn two_loop(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
