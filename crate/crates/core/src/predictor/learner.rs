//! Online linear learners over running-standardized features.

use serde::{Deserialize, Serialize};

/// Standardized features are clipped to this many standard deviations so a
/// single outlier early in the stream cannot blow up a gradient step.
const Z_CLIP: f64 = 3.0;

/// Welford running mean and variance for one feature.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStat {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStat {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    /// Standardized value; features with no observed spread map to zero.
    pub fn standardize(&self, x: f64) -> f64 {
        let var = self.variance();
        if var <= 1e-12 {
            return 0.0;
        }
        ((x - self.mean) / var.sqrt()).clamp(-Z_CLIP, Z_CLIP)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    stats: Vec<RunningStat>,
}

impl Standardizer {
    pub fn new(width: usize) -> Self {
        Standardizer { stats: vec![RunningStat::default(); width] }
    }

    pub fn observe(&mut self, x: &[f64]) {
        if self.stats.len() < x.len() {
            self.stats.resize(x.len(), RunningStat::default());
        }
        for (s, &v) in self.stats.iter_mut().zip(x) {
            s.push(v);
        }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, &v)| self.stats.get(i).map_or(0.0, |s| s.standardize(v))).collect()
    }
}

/// Linear model `bias + weights . z` trained by plain SGD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub bias: f64,
    pub weights: Vec<f64>,
}

impl LinearHead {
    pub fn new(width: usize, bias: f64) -> Self {
        LinearHead { bias, weights: vec![0.0; width] }
    }

    pub fn score(&self, z: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(z).map(|(w, x)| w * x).sum::<f64>()
    }

    /// One gradient step given `residual = target - prediction`. For squared
    /// loss and for the logistic log-loss this has the same form.
    ///
    /// The bias takes the plain step. The weight step is normalized by
    /// `1 + |z|^2` (normalized LMS), so one update moves the score by less
    /// than `2 * learning_rate * residual` whatever the feature scale, and
    /// weight noise on correlated features stays small.
    pub fn step(&mut self, z: &[f64], residual: f64, learning_rate: f64) {
        if self.weights.len() < z.len() {
            self.weights.resize(z.len(), 0.0);
        }
        self.bias += learning_rate * residual;
        let rate = learning_rate * residual / (1.0 + z.iter().map(|x| x * x).sum::<f64>());
        for (w, x) in self.weights.iter_mut().zip(z) {
            *w += rate * x;
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-6, 1.0 - 1e-6);
    (p / (1.0 - p)).ln()
}

/// Regression on `log1p(target)`; predictions are mapped back with `expm1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegressor {
    head: LinearHead,
}

/// Upper bound on the log-space prediction; `expm1(30)` is about 1e13.
const LOG_CEILING: f64 = 30.0;

impl LogRegressor {
    pub fn new(width: usize, prior: f64) -> Self {
        LogRegressor { head: LinearHead::new(width, prior.max(0.0).ln_1p()) }
    }

    pub fn predict(&self, z: &[f64]) -> f64 {
        self.head.score(z).clamp(0.0, LOG_CEILING).exp_m1()
    }

    pub fn learn(&mut self, z: &[f64], target: f64, learning_rate: f64) {
        let y = target.max(0.0).ln_1p();
        let residual = y - self.head.score(z);
        self.head.step(z, residual, learning_rate);
    }

    pub fn head(&self) -> &LinearHead {
        &self.head
    }
}

/// Logistic model for a 0/1 outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticClassifier {
    head: LinearHead,
}

impl LogisticClassifier {
    pub fn new(width: usize, prior: f64) -> Self {
        LogisticClassifier { head: LinearHead::new(width, logit(prior)) }
    }

    pub fn predict(&self, z: &[f64]) -> f64 {
        sigmoid(self.head.score(z))
    }

    pub fn learn(&mut self, z: &[f64], label: bool, learning_rate: f64) {
        let y = if label { 1.0 } else { 0.0 };
        let residual = y - self.predict(z);
        self.head.step(z, residual, learning_rate);
    }

    pub fn head(&self) -> &LinearHead {
        &self.head
    }
}
