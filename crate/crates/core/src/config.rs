//! The single structured configuration file shared by every experiment.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::predictor::{PricingProfile, WarmupConfig};
use crate::router::{AgentProfile, HubScheme, RouterConfig};
use crate::simnet::{EngineConfig, SimAgentConfig, StrategyKind, StrategyProfile, WorkloadConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), message: message.into() }
    }

    /// Dotted path of the offending field, when known.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            ConfigError::Parse(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HubsConfig {
    pub count: usize,
    pub scheme: HubScheme,
}

impl Default for HubsConfig {
    fn default() -> Self {
        HubsConfig { count: 1, scheme: HubScheme::Domain }
    }
}

/// Contended market for the bidding-strategy experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthfulnessConfig {
    pub rounds: usize,
    /// Strategies of the clients competing with the focal client.
    pub opponents: Vec<StrategyKind>,
    pub agents: usize,
    pub capacity: u32,
    pub value_scale: f64,
    pub quality_range: [f64; 2],
    pub latency_range_ms: [f64; 2],
    pub cost_range: [f64; 2],
    pub alpha: f64,
    pub beta: f64,
    pub random_range: [f64; 2],
}

impl Default for TruthfulnessConfig {
    fn default() -> Self {
        TruthfulnessConfig {
            rounds: 100,
            opponents: vec![StrategyKind::Aggressive, StrategyKind::Conservative, StrategyKind::Random],
            agents: 2,
            capacity: 1,
            value_scale: 40.0,
            quality_range: [0.6, 1.0],
            latency_range_ms: [50.0, 400.0],
            cost_range: [1.0, 8.0],
            alpha: 1.5,
            beta: 0.6,
            random_range: [0.5, 1.5],
        }
    }
}

impl TruthfulnessConfig {
    pub fn strategy(&self, kind: StrategyKind) -> StrategyProfile {
        StrategyProfile {
            kind,
            alpha: self.alpha,
            beta: self.beta,
            random_low: self.random_range[0],
            random_high: self.random_range[1],
        }
    }
}

/// Synthetic one-shot market for the hub-count sweep and scheme comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub agents: usize,
    pub tasks: usize,
    pub domains: usize,
    pub k_values: Vec<usize>,
    pub capacity_range: [u32; 2],
    /// Value of a task on an agent of its own domain.
    pub on_domain_value: [f64; 2],
    pub off_domain_value: [f64; 2],
    pub cost_range: [f64; 2],
    /// Hubs used by the scheme comparison.
    pub scheme_hubs: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            agents: 100,
            tasks: 200,
            domains: 5,
            k_values: vec![1, 2, 4, 5],
            capacity_range: [1, 3],
            on_domain_value: [50.0, 100.0],
            off_domain_value: [10.0, 40.0],
            cost_range: [5.0, 25.0],
            scheme_hubs: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorEvalConfig {
    /// Length of the stationary stream.
    pub updates: usize,
    /// Trailing window over which NMAE is measured.
    pub window: usize,
    pub latency_target_ms: f64,
    pub cost_target: f64,
    /// Multiplicative noise amplitude on stationary observations.
    pub noise: f64,
    pub nmae_target: f64,
    /// Dialogues in the cold-start simulated run whose prediction error is
    /// compared between its first and last quartile.
    pub drift_dialogues: usize,
}

impl Default for PredictorEvalConfig {
    fn default() -> Self {
        PredictorEvalConfig {
            updates: 500,
            window: 50,
            latency_target_ms: 120.0,
            cost_target: 3.0,
            noise: 0.02,
            nmae_target: 0.05,
            drift_dialogues: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub router: RouterConfig,
    pub hubs: HubsConfig,
    pub engine: EngineConfig,
    pub workload: WorkloadConfig,
    pub warmup: WarmupConfig,
    pub agents: Vec<SimAgentConfig>,
    pub truthfulness: TruthfulnessConfig,
    pub cluster: ClusterConfig,
    pub predictor_eval: PredictorEvalConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            router: RouterConfig::default(),
            hubs: HubsConfig::default(),
            engine: EngineConfig::default(),
            workload: WorkloadConfig::default(),
            warmup: WarmupConfig { dialogues_per_agent: 16, ..WarmupConfig::default() },
            agents: default_agents(),
            truthfulness: TruthfulnessConfig::default(),
            cluster: ClusterConfig::default(),
            predictor_eval: PredictorEvalConfig::default(),
        }
    }
}

/// Three single-domain agents of equal size.
pub fn default_agents() -> Vec<SimAgentConfig> {
    ["code", "math", "qa"]
        .iter()
        .enumerate()
        .map(|(i, domain)| SimAgentConfig {
            profile: AgentProfile {
                id: format!("agent{i}"),
                scale: 1.0,
                domain: domain.to_string(),
                capacity: 4,
                prices: PricingProfile { miss: 0.004, hit: 0.0004, out: 0.005 },
            },
            prefill_ms_per_token: 0.5,
            fixed_ms: 30.0,
            queue_ms: 15.0,
            decode_ms_per_token: 4.0,
            acc_match: 0.85,
            acc_off: 0.6,
            cache_tokens: 2000,
            jitter: 0.1,
            gen_tokens_min: 20,
            gen_tokens_max: 60,
        })
        .collect()
}

fn check(ok: bool, field: &str, message: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, message()))
    }
}

fn range(field: &str, r: [f64; 2], min: f64) -> Result<(), ConfigError> {
    check(r[0].is_finite() && r[1].is_finite() && min <= r[0] && r[0] <= r[1], field, || {
        format!("expected {min} <= low <= high, got [{}, {}]", r[0], r[1])
    })
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Config, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to toml")
    }

    /// Hex sha256 of the canonical serialized form.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml_string().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn agent_profiles(&self) -> Vec<AgentProfile> {
        self.agents.iter().map(|a| a.profile.clone()).collect()
    }

    /// Domain tags known to the predictors: the configured list, or every
    /// agent and workload domain when the list is empty.
    pub fn domain_tags(&self) -> Vec<String> {
        if !self.router.domains.is_empty() {
            return self.router.domains.clone();
        }
        let tags: BTreeSet<String> = self
            .agents
            .iter()
            .map(|a| a.profile.domain.clone())
            .chain(self.workload.domain_mix.iter().map(|d| d.domain.clone()))
            .collect();
        tags.into_iter().collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let r = &self.router;
        r.batcher.validate().map_err(|m| ConfigError::invalid("router.batcher", m))?;
        check(r.rate_window_ms > 0.0 && r.rate_window_ms.is_finite(), "router.rate_window_ms", || {
            "must be positive".into()
        })?;
        r.valuation.validate().map_err(|m| ConfigError::invalid("router.valuation", m))?;
        let p = &r.predictor;
        check(p.learning_rate >= 0.0 && p.learning_rate.is_finite(), "router.predictor.learning_rate", || {
            "must be a non-negative number".into()
        })?;
        check(p.priors.latency_ms >= 0.0, "router.predictor.priors.latency_ms", || "must be non-negative".into())?;
        check(p.priors.cost >= 0.0, "router.predictor.priors.cost", || "must be non-negative".into())?;
        check((0.0..=1.0).contains(&p.priors.quality), "router.predictor.priors.quality", || {
            "must lie in [0, 1]".into()
        })?;
        check(r.ledger_capacity >= 1, "router.ledger_capacity", || "must be at least 1".into())?;
        check((0.0..=1.0).contains(&r.evict_threshold), "router.evict_threshold", || "must lie in [0, 1]".into())?;

        check(self.engine.concurrency >= 1, "engine.concurrency", || "must be at least 1".into())?;
        check(self.engine.think_time_ms >= 0.0, "engine.think_time_ms", || "must be non-negative".into())?;
        self.workload.validate().map_err(|m| ConfigError::invalid("workload", m))?;
        check(self.warmup.turns >= 1 || self.warmup.dialogues_per_agent == 0, "warmup.turns", || {
            "must be at least 1".into()
        })?;

        check(!self.agents.is_empty(), "agents", || "at least one agent is required".into())?;
        let mut ids = BTreeSet::new();
        for (i, a) in self.agents.iter().enumerate() {
            check(ids.insert(a.profile.id.as_str()), &format!("agents[{i}].id"), || {
                format!("duplicate id `{}`", a.profile.id)
            })?;
            a.validate().map_err(|m| ConfigError::invalid(format!("agents[{i}]"), m))?;
        }
        let domains = self.agents.iter().map(|a| a.profile.domain.as_str()).collect::<BTreeSet<_>>().len();
        let max_hubs = match self.hubs.scheme {
            HubScheme::Domain => domains,
            HubScheme::FullMix => self.agents.len(),
        };
        check((1..=max_hubs).contains(&self.hubs.count), "hubs.count", || format!("must lie in 1..={max_hubs}"))?;

        let t = &self.truthfulness;
        check(t.rounds >= 1, "truthfulness.rounds", || "must be at least 1".into())?;
        check(t.agents >= 1, "truthfulness.agents", || "must be at least 1".into())?;
        check(t.value_scale > 0.0, "truthfulness.value_scale", || "must be positive".into())?;
        range("truthfulness.quality_range", t.quality_range, 0.0)?;
        check(t.quality_range[1] <= 1.0, "truthfulness.quality_range", || "must lie in [0, 1]".into())?;
        range("truthfulness.latency_range_ms", t.latency_range_ms, 0.0)?;
        range("truthfulness.cost_range", t.cost_range, 0.0)?;
        t.strategy(StrategyKind::Random).validate().map_err(|m| ConfigError::invalid("truthfulness", m))?;

        let c = &self.cluster;
        check(c.agents >= 1, "cluster.agents", || "must be at least 1".into())?;
        check(c.domains >= 1, "cluster.domains", || "must be at least 1".into())?;
        check(!c.k_values.is_empty(), "cluster.k_values", || "must list at least one K".into())?;
        if let Some(k) = c.k_values.iter().find(|&&k| k == 0 || k > c.domains) {
            return Err(ConfigError::invalid("cluster.k_values", format!("K={k} outside 1..={}", c.domains)));
        }
        check(c.capacity_range[0] <= c.capacity_range[1], "cluster.capacity_range", || "low exceeds high".into())?;
        range("cluster.on_domain_value", c.on_domain_value, 0.0)?;
        range("cluster.off_domain_value", c.off_domain_value, 0.0)?;
        range("cluster.cost_range", c.cost_range, 0.0)?;
        check((1..=c.domains).contains(&c.scheme_hubs), "cluster.scheme_hubs", || {
            format!("must lie in 1..={}", c.domains)
        })?;

        let e = &self.predictor_eval;
        check(e.updates >= 1, "predictor_eval.updates", || "must be at least 1".into())?;
        check((1..=e.updates).contains(&e.window), "predictor_eval.window", || "must lie in 1..=updates".into())?;
        check(e.latency_target_ms > 0.0, "predictor_eval.latency_target_ms", || "must be positive".into())?;
        check(e.cost_target > 0.0, "predictor_eval.cost_target", || "must be positive".into())?;
        check((0.0..1.0).contains(&e.noise), "predictor_eval.noise", || "must lie in [0, 1)".into())?;
        check(e.drift_dialogues >= 4, "predictor_eval.drift_dialogues", || "must be at least 4".into())?;
        Ok(())
    }
}
