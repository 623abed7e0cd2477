//! Per-agent online QoS prediction, realized-cost accounting and the
//! valuation that turns predicted QoS into a bid.

mod cost;
mod features;
pub mod learner;
mod pool;
mod warmup;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cost::{observed_cost, token_count, valuation, PricingProfile, TokenUsage, ValuationConfig, CHARS_PER_TOKEN};
pub use features::{featurize, AgentLoad, DomainSet, FeatureVector, LoadSnapshot, RequestFeatures};
pub use pool::{OnlineLinearModel, PredictorConfig, PredictorPool, QosModel, SNAPSHOT_VERSION};
pub use warmup::{warmup, WarmupConfig, WarmupReport};

/// Predicted latency (time to first token), cost and answer quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosEstimate {
    pub latency_ms: f64,
    pub cost: f64,
    /// Probability of a correct answer.
    pub quality: f64,
}

impl QosEstimate {
    pub fn clamped(self) -> QosEstimate {
        let finite_or_zero = |x: f64| if x.is_finite() { x.max(0.0) } else { 0.0 };
        QosEstimate {
            latency_ms: finite_or_zero(self.latency_ms),
            cost: finite_or_zero(self.cost),
            quality: if self.quality.is_finite() { self.quality.clamp(0.0, 1.0) } else { 0.0 },
        }
    }
}

/// Realized outcome of one served request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Time to first token in ms.
    pub latency_ms: f64,
    pub usage: TokenUsage,
    pub cost: f64,
    pub correct: bool,
}

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("no predictor registered for agent `{agent}`")]
    UnknownAgent { agent: String },
    #[error("hit tokens {hit} exceed prompt tokens {prompt}")]
    HitExceedsPrompt { hit: u64, prompt: u64 },
    #[error("predictor snapshot: {0}")]
    Snapshot(String),
}

/// Normalized mean absolute error: `sum |pred - obs| / sum |obs|`.
pub fn nmae(pairs: &[(f64, f64)]) -> f64 {
    let abs_err: f64 = pairs.iter().map(|(p, o)| (p - o).abs()).sum();
    let scale: f64 = pairs.iter().map(|(_, o)| o.abs()).sum();
    if scale == 0.0 {
        if abs_err == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        abs_err / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_enforces_ranges() {
        let q = QosEstimate { latency_ms: -3.0, cost: f64::NAN, quality: 1.7 }.clamped();
        assert_eq!(q, QosEstimate { latency_ms: 0.0, cost: 0.0, quality: 1.0 });
    }

    #[test]
    fn nmae_normalizes_by_observed_mass() {
        assert_eq!(nmae(&[(110.0, 100.0), (90.0, 100.0)]), 0.1);
        assert_eq!(nmae(&[]), 0.0);
    }
}
