use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tfidf::SparseVec;
use super::BaselineError;
use crate::label::TriageLabel;

const K: usize = TriageLabel::COUNT;
/// Armijo sufficient-decrease constant.
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    /// Inverse of sklearn's `C`; 1.0 is the library default.
    pub l2_strength: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            l2_strength: 1.0,
            max_iter: 1000,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub final_loss: f64,
    pub final_gradient_norm: f64,
    pub converged: bool,
    pub l2_strength: f64,
    /// Objective after each accepted step, starting with the initial value.
    pub loss_trace: Vec<f64>,
}

/// Multinomial model; class rows follow severity order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub n_features: usize,
    /// Row-major `K x n_features`.
    pub weights: Vec<f64>,
    pub bias: [f64; K],
    pub meta: TrainingMeta,
}

/// Flat parameter layout: `K * d` weights followed by `K` biases.
pub fn param_len(n_features: usize) -> usize {
    K * n_features + K
}

fn logits(params: &[f64], d: usize, x: &SparseVec) -> [f64; K] {
    let mut z = [0.0; K];
    for (k, zk) in z.iter_mut().enumerate() {
        let row = &params[k * d..(k + 1) * d];
        *zk = params[K * d + k] + x.iter().map(|(j, v)| row[j] * v).sum::<f64>();
    }
    z
}

fn softmax(z: [f64; K]) -> [f64; K] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = z.map(|v| libm::exp(v - m));
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    p
}

fn log_sum_exp(z: &[f64; K]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + libm::log(z.iter().map(|v| libm::exp(v - m)).sum())
}

/// Objective: mean cross-entropy plus `l2 / (2n) * ||W||^2` (bias unpenalized).
pub fn loss(params: &[f64], d: usize, x: &[SparseVec], y: &[TriageLabel], l2: f64) -> f64 {
    let n = x.len() as f64;
    let ce: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let z = logits(params, d, xi);
            log_sum_exp(&z) - z[yi.index()]
        })
        .sum();
    let reg: f64 = params[..K * d].iter().map(|w| w * w).sum();
    ce / n + l2 / (2.0 * n) * reg
}

pub fn loss_and_gradient(params: &[f64], d: usize, x: &[SparseVec], y: &[TriageLabel], l2: f64) -> (f64, Vec<f64>) {
    let n = x.len() as f64;
    let mut grad = vec![0.0; params.len()];
    let mut ce = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let z = logits(params, d, xi);
        ce += log_sum_exp(&z) - z[yi.index()];
        let mut diff = softmax(z);
        diff[yi.index()] -= 1.0;
        for (k, dk) in diff.iter().enumerate() {
            let dk = dk / n;
            for (j, v) in xi.iter() {
                grad[k * d + j] += dk * v;
            }
            grad[K * d + k] += dk;
        }
    }
    let mut reg = 0.0;
    for (g, w) in grad[..K * d].iter_mut().zip(&params[..K * d]) {
        *g += l2 / n * w;
        reg += w * w;
    }
    (ce / n + l2 / (2.0 * n) * reg, grad)
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|g| g * g).sum())
}

/// Full-batch gradient descent from zero with Armijo backtracking.
///
/// Stops when the gradient norm drops below `tol` or after `max_iter`
/// accepted steps. Every accepted step satisfies the sufficient-decrease
/// condition, so the recorded loss trace is non-increasing.
pub fn train_logreg(
    x: &[SparseVec],
    y: &[TriageLabel],
    n_features: usize,
    cfg: &LogRegConfig,
) -> Result<LogRegModel, BaselineError> {
    if x.len() != y.len() {
        return Err(BaselineError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 4 {
        return Err(BaselineError::TooFewSamples(x.len()));
    }
    let mut present = [false; K];
    y.iter().for_each(|l| present[l.index()] = true);
    if present.iter().filter(|p| **p).count() < 2 {
        return Err(BaselineError::SingleClass);
    }
    for xi in x {
        if xi.values.iter().any(|v| !v.is_finite()) {
            return Err(BaselineError::NonFiniteFeature);
        }
        if xi.indices.iter().any(|&j| j >= n_features) {
            return Err(BaselineError::FeatureOutOfRange);
        }
    }

    let d = n_features;
    let l2 = cfg.l2_strength;
    let mut params = vec![0.0; param_len(d)];
    let (mut f, mut g) = loss_and_gradient(&params, d, x, y, l2);
    let mut trace = vec![f];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut gnorm = norm(&g);
    let mut trial = vec![0.0; params.len()];

    while gnorm >= cfg.tol && iterations < cfg.max_iter {
        let g2 = gnorm * gnorm;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            for ((t, p), gi) in trial.iter_mut().zip(&params).zip(&g) {
                *t = p - step * gi;
            }
            let ft = loss(&trial, d, x, y, l2);
            if ft <= f - ARMIJO * step * g2 {
                accepted = Some(ft);
                break;
            }
            step *= 0.5;
        }
        let Some(_) = accepted else { break };
        core::mem::swap(&mut params, &mut trial);
        (f, g) = loss_and_gradient(&params, d, x, y, l2);
        gnorm = norm(&g);
        trace.push(f);
        iterations += 1;
        step *= 2.0;
    }

    let mut bias = [0.0; K];
    bias.copy_from_slice(&params[K * d..]);
    params.truncate(K * d);
    Ok(LogRegModel {
        n_features: d,
        weights: params,
        bias,
        meta: TrainingMeta {
            iterations,
            final_loss: f,
            final_gradient_norm: gnorm,
            converged: gnorm < cfg.tol,
            l2_strength: l2,
            loss_trace: trace,
        },
    })
}

impl LogRegModel {
    pub fn scores(&self, x: &SparseVec) -> [f64; K] {
        let d = self.n_features;
        let mut z = self.bias;
        for (k, zk) in z.iter_mut().enumerate() {
            let row = &self.weights[k * d..(k + 1) * d];
            *zk += x.iter().filter(|(j, _)| *j < d).map(|(j, v)| row[j] * v).sum::<f64>();
        }
        z
    }

    pub fn probabilities(&self, x: &SparseVec) -> [f64; K] {
        softmax(self.scores(x))
    }

    /// Argmax; ties go to the lower severity.
    pub fn predict(&self, x: &SparseVec) -> TriageLabel {
        let z = self.scores(x);
        let mut best = 0;
        for k in 1..K {
            if z[k] > z[best] {
                best = k;
            }
        }
        TriageLabel::ALL[best]
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::TriageLabel::*;

    fn dense(v: &[f64]) -> SparseVec {
        SparseVec {
            indices: (0..v.len()).collect(),
            values: v.to_vec(),
        }
    }

    fn separable() -> (Vec<SparseVec>, Vec<TriageLabel>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let e = i as f64 * 0.05;
            x.push(dense(&[3.0 + e, -1.0 - e, 1.0]));
            y.push(SelfCare);
            x.push(dense(&[-3.0 - e, 1.0 + e, 1.0]));
            y.push(EmergencyReferral);
        }
        (x, y)
    }

    #[test]
    fn separable_fixture_fits_perfectly() {
        let (x, y) = separable();
        let m = train_logreg(&x, &y, 3, &LogRegConfig::default()).unwrap();
        assert!(m.is_finite());
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi), *yi);
        }
        assert!(m.meta.loss_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_vector_uses_bias_deterministically() {
        let (x, y) = separable();
        let m = train_logreg(&x, &y, 3, &LogRegConfig::default()).unwrap();
        let z = SparseVec::default();
        assert_eq!(m.predict(&z), m.predict(&z));
        let untrained = LogRegModel {
            n_features: 3,
            weights: vec![0.0; 12],
            bias: [0.0; 4],
            meta: m.meta.clone(),
        };
        assert_eq!(untrained.predict(&z), SelfCare);
    }

    #[test]
    fn input_validation() {
        let (x, y) = separable();
        assert_eq!(
            train_logreg(&x[..3], &y[..3], 3, &LogRegConfig::default()),
            Err(BaselineError::TooFewSamples(3))
        );
        let same = vec![SelfCare; x.len()];
        assert_eq!(train_logreg(&x, &same, 3, &LogRegConfig::default()), Err(BaselineError::SingleClass));
        let mut bad = x.clone();
        bad[0].values[0] = f64::NAN;
        assert_eq!(train_logreg(&bad, &y, 3, &LogRegConfig::default()), Err(BaselineError::NonFiniteFeature));
    }
}
