//! Standardized linear models: L2 logistic regression and a hinge-loss SVM,
//! both trained by seeded stochastic (sub)gradient descent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Column means and inverse standard deviations. Constant columns get a
/// zero scale, so they contribute nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub inv_std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let inv_std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    1.0 / sd
                } else {
                    0.0
                }
            })
            .collect();
        Standardizer { mean, inv_std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.inv_std)
            .map(|((v, m), s)| (v - m) * s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.apply(row);
        dot(&self.weights, &z) + self.bias
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn target(y: bool) -> f64 {
    if y {
        1.0
    } else {
        0.0
    }
}

/// Mean log-loss plus `l2/2 * |w|^2` (bias unregularized), with its
/// gradient in `(w, b)`.
pub fn logistic_loss_and_gradient(
    weights: &[f64],
    bias: f64,
    x: &[Vec<f64>],
    y: &[bool],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let t = dot(weights, row) + bias;
        let p = sigmoid(t);
        // log(1 + e^t) - y t, computed stably
        let softplus = if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
        loss += softplus - target(label) * t;
        let r = p - target(label);
        for (g, v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
        gb += r;
    }
    loss /= n;
    gw.iter_mut().zip(weights).for_each(|(g, w)| *g = *g / n + l2 * w);
    loss += 0.5 * l2 * dot(weights, weights);
    (loss, gw, gb / n)
}

pub(crate) fn train_logistic(
    x: &[Vec<f64>],
    y: &[bool],
    l2: f64,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> LinearModel {
    let standardizer = Standardizer::fit(x);
    let z: Vec<Vec<f64>> = x.iter().map(|r| standardizer.apply(r)).collect();
    let d = standardizer.mean.len();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..z.len()).collect();
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let lr = learning_rate / (1.0 + epoch as f64).sqrt();
        for &i in &order {
            let r = sigmoid(dot(&w, &z[i]) + b) - target(y[i]);
            for ((wj, zj), sj) in w.iter_mut().zip(&z[i]).zip(&standardizer.inv_std) {
                if *sj != 0.0 {
                    *wj -= lr * (r * zj + l2 * *wj);
                }
            }
            b -= lr * r;
        }
    }
    LinearModel {
        standardizer,
        weights: w,
        bias: b,
    }
}

/// Pegasos: step `1/(lambda t)`, projection onto the `1/sqrt(lambda)` ball.
/// The bias is an extra always-one feature.
pub(crate) fn train_svm(x: &[Vec<f64>], y: &[bool], lambda: f64, epochs: usize, seed: u64) -> LinearModel {
    let standardizer = Standardizer::fit(x);
    let z: Vec<Vec<f64>> = x.iter().map(|r| standardizer.apply(r)).collect();
    let d = standardizer.mean.len();
    let mut w = vec![0.0; d + 1];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..z.len()).collect();
    let radius = 1.0 / lambda.sqrt();
    let mut t = 0usize;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let yi = if y[i] { 1.0 } else { -1.0 };
            let margin = yi * (dot(&w[..d], &z[i]) + w[d]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wj, zj) in w[..d].iter_mut().zip(&z[i]) {
                    *wj += eta * yi * zj;
                }
                w[d] += eta * yi;
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
    let bias = w.pop().unwrap_or(0.0);
    LinearModel {
        standardizer,
        weights: w,
        bias,
    }
}
