use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::predictor::{observed_cost, token_count, Observation, TokenUsage};
use crate::router::AgentProfile;

/// Configuration of one simulated agent: its advertised profile plus the
/// hidden latency, quality and cache behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimAgentConfig {
    #[serde(flatten)]
    pub profile: AgentProfile,
    /// Prefill time per uncached prompt token.
    pub prefill_ms_per_token: f64,
    /// Fixed overhead added to every time to first token.
    pub fixed_ms: f64,
    /// Extra delay per request already running on the agent.
    pub queue_ms: f64,
    /// Decode time per generated token, after the first token.
    pub decode_ms_per_token: f64,
    pub acc_match: f64,
    pub acc_off: f64,
    /// KV cache size in tokens.
    pub cache_tokens: u64,
    /// Multiplicative latency noise amplitude; TTFT is scaled by `1 + jitter * U(-1, 1)`.
    pub jitter: f64,
    pub gen_tokens_min: u64,
    pub gen_tokens_max: u64,
}

impl SimAgentConfig {
    pub fn validate(&self) -> Result<(), String> {
        let id = &self.profile.id;
        self.profile.prices.validate().map_err(|e| format!("agent `{id}`: {e}"))?;
        for (name, acc) in [("acc_match", self.acc_match), ("acc_off", self.acc_off)] {
            if !(0.0..=1.0).contains(&acc) {
                return Err(format!("agent `{id}`: {name} {acc} outside [0, 1]"));
            }
        }
        for (name, v) in [
            ("prefill_ms_per_token", self.prefill_ms_per_token),
            ("fixed_ms", self.fixed_ms),
            ("queue_ms", self.queue_ms),
            ("decode_ms_per_token", self.decode_ms_per_token),
            ("jitter", self.jitter),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("agent `{id}`: {name} must be a non-negative number"));
            }
        }
        if self.jitter >= 1.0 {
            return Err(format!("agent `{id}`: jitter must be below 1"));
        }
        if self.gen_tokens_min > self.gen_tokens_max {
            return Err(format!("agent `{id}`: gen_tokens_min exceeds gen_tokens_max"));
        }
        Ok(())
    }
}

/// One request as the simulated agent sees it.
#[derive(Debug, Clone, Copy)]
pub struct SimTask<'a> {
    pub prompt: &'a str,
    pub dialogue_id: &'a str,
    pub domain: &'a str,
    pub gold: &'a str,
}

/// What an execution produced, beyond the observation the router learns from.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub observation: Observation,
    pub output: String,
    /// Time from first token to completion.
    pub decode_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CachedPrefix {
    tokens: u64,
    last_used: u64,
}

/// Random streams an execution draws from.
pub struct ExecRngs<'a, R: Rng> {
    pub jitter: &'a mut R,
    pub quality: &'a mut R,
    pub generation: &'a mut R,
}

#[derive(Debug, Clone)]
pub struct SimAgent {
    pub config: SimAgentConfig,
    cache: BTreeMap<String, CachedPrefix>,
    cache_used: u64,
    clock: u64,
    inflight: u32,
}

impl SimAgent {
    pub fn new(config: SimAgentConfig) -> Self {
        SimAgent { config, cache: BTreeMap::new(), cache_used: 0, clock: 0, inflight: 0 }
    }

    pub fn id(&self) -> &str {
        &self.config.profile.id
    }

    pub fn inflight(&self) -> u32 {
        self.inflight
    }

    pub fn cache_used(&self) -> u64 {
        self.cache_used
    }

    pub fn cached_tokens(&self, dialogue_id: &str) -> Option<u64> {
        self.cache.get(dialogue_id).map(|c| c.tokens)
    }

    /// Serves `task`, occupying one slot until [`SimAgent::finish`].
    ///
    /// Cached prefix tokens for the dialogue are reused; the dialogue's cache
    /// entry is then replaced by the full prompt and least recently used
    /// dialogues are evicted until the cache fits again.
    pub fn execute<R: Rng>(&mut self, task: SimTask<'_>, rngs: ExecRngs<'_, R>) -> Result<Execution, SimError> {
        let cfg = &self.config;
        if self.inflight >= cfg.profile.capacity {
            return Err(SimError::NoFreeSlot { agent: cfg.profile.id.clone() });
        }
        let prompt_tokens = token_count(task.prompt.chars().count());
        let hit = self.cache.get(task.dialogue_id).map_or(0, |c| c.tokens.min(prompt_tokens));

        let base_ttft = cfg.prefill_ms_per_token * (prompt_tokens - hit) as f64
            + cfg.fixed_ms
            + cfg.queue_ms * f64::from(self.inflight);
        let noise: f64 = rngs.jitter.gen_range(-1.0..=1.0);
        let ttft = base_ttft * (1.0 + cfg.jitter * noise);

        let generated = rngs.generation.gen_range(cfg.gen_tokens_min..=cfg.gen_tokens_max);
        let usage = TokenUsage { prompt: prompt_tokens, hit, generated };
        let cost = observed_cost(usage, &cfg.profile.prices).expect("hit is capped at prompt tokens");

        let accuracy = if task.domain == cfg.profile.domain { cfg.acc_match } else { cfg.acc_off };
        let output = if rngs.quality.gen_bool(accuracy) {
            format!("The answer is {}.", task.gold)
        } else {
            "Sorry, that is unclear to me.".to_string()
        };
        let correct = super::evaluate_answer(&output, task.gold);
        let decode_ms = cfg.decode_ms_per_token * generated.saturating_sub(1) as f64;

        self.store_prefix(task.dialogue_id, prompt_tokens);
        self.inflight += 1;
        Ok(Execution { observation: Observation { latency_ms: ttft, usage, cost, correct }, output, decode_ms })
    }

    /// Releases the slot taken by [`SimAgent::execute`].
    pub fn finish(&mut self) {
        self.inflight = self.inflight.saturating_sub(1);
    }

    fn store_prefix(&mut self, dialogue_id: &str, tokens: u64) {
        self.clock += 1;
        if let Some(old) = self.cache.remove(dialogue_id) {
            self.cache_used -= old.tokens;
        }
        if tokens > self.config.cache_tokens {
            return;
        }
        while self.cache_used + tokens > self.config.cache_tokens {
            let victim = self
                .cache
                .iter()
                .min_by_key(|(_, c)| c.last_used)
                .map(|(d, _)| d.clone())
                .expect("cache over budget implies a resident entry");
            let evicted = self.cache.remove(&victim).expect("victim is resident");
            self.cache_used -= evicted.tokens;
        }
        self.cache.insert(dialogue_id.to_string(), CachedPrefix { tokens, last_used: self.clock });
        self.cache_used += tokens;
    }
}
