use serde::{Deserialize, Serialize};

use super::{PredictorError, QosEstimate};

/// Characters per token in the shared tokenization rule.
pub const CHARS_PER_TOKEN: usize = 4;

/// Token count of a text of `chars` characters: `ceil(chars / 4)`.
pub fn token_count(chars: usize) -> u64 {
    chars.div_ceil(CHARS_PER_TOKEN) as u64
}

/// Per-token prices of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingProfile {
    /// Uncached prompt tokens.
    pub miss: f64,
    /// Prompt tokens served from the KV cache.
    pub hit: f64,
    /// Generated tokens.
    pub out: f64,
}

impl PricingProfile {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.miss >= 0.0 && self.hit >= 0.0 && self.out >= 0.0) {
            return Err("prices must be non-negative".into());
        }
        if self.hit > self.miss {
            return Err(format!("hit price {} exceeds miss price {}", self.hit, self.miss));
        }
        Ok(())
    }

    pub fn scaled(&self, k: f64) -> PricingProfile {
        PricingProfile { miss: self.miss * k, hit: self.hit * k, out: self.out * k }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt: u64,
    pub hit: u64,
    pub generated: u64,
}

/// Realized cost of a request from its token usage.
pub fn observed_cost(usage: TokenUsage, prices: &PricingProfile) -> Result<f64, PredictorError> {
    if usage.hit > usage.prompt {
        return Err(PredictorError::HitExceedsPrompt { hit: usage.hit, prompt: usage.prompt });
    }
    let missed = (usage.prompt - usage.hit) as f64;
    Ok(prices.miss * missed + prices.hit * usage.hit as f64 + prices.out * usage.generated as f64)
}

/// Scalarization of predicted QoS into a currency valuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValuationConfig {
    /// Weight on quality versus latency, in `[0, 1]`.
    pub delta: f64,
    /// Latency that maps to a full unit of latency penalty, in ms.
    pub latency_ref_ms: f64,
    /// Currency per unit of the dimensionless valuation.
    pub value_scale: f64,
}

impl Default for ValuationConfig {
    fn default() -> Self {
        ValuationConfig { delta: 0.5, latency_ref_ms: 1000.0, value_scale: 20.0 }
    }
}

impl ValuationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(format!("delta {} outside [0, 1]", self.delta));
        }
        if self.latency_ref_ms.is_nan() || self.latency_ref_ms <= 0.0 {
            return Err("latency_ref_ms must be positive".into());
        }
        if self.value_scale.is_nan() || self.value_scale <= 0.0 {
            return Err("value_scale must be positive".into());
        }
        Ok(())
    }
}

/// `V * (delta * Q - (1 - delta) * min(L / L_ref, 1))`.
pub fn valuation(estimate: &QosEstimate, cfg: &ValuationConfig) -> f64 {
    let latency = (estimate.latency_ms / cfg.latency_ref_ms).clamp(0.0, 1.0);
    cfg.value_scale * (cfg.delta * estimate.quality - (1.0 - cfg.delta) * latency)
}
