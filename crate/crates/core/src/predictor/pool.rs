use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::learner::{LogRegressor, LogisticClassifier, Standardizer};
use super::{DomainSet, FeatureVector, Observation, PredictorError, QosEstimate};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    pub learning_rate: f64,
    /// Observations an agent's model needs before its output replaces the priors.
    pub min_observations: u64,
    pub priors: QosEstimate,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            learning_rate: 0.05,
            min_observations: 5,
            priors: QosEstimate { latency_ms: 400.0, cost: 10.0, quality: 0.5 },
        }
    }
}

/// Anything that can serve as one agent's QoS model.
pub trait QosModel {
    fn predict(&self, x: &FeatureVector) -> QosEstimate;
    fn learn(&mut self, x: &FeatureVector, obs: &Observation);
    fn observations(&self) -> u64;
}

/// Default model: three online linear heads sharing one standardizer.
/// Latency and cost regress on `log1p` targets; quality is logistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineLinearModel {
    observations: u64,
    learning_rate: f64,
    standardizer: Standardizer,
    latency: LogRegressor,
    cost: LogRegressor,
    quality: LogisticClassifier,
}

impl OnlineLinearModel {
    pub fn new(width: usize, priors: &QosEstimate, learning_rate: f64) -> Self {
        OnlineLinearModel {
            observations: 0,
            learning_rate,
            standardizer: Standardizer::new(width),
            latency: LogRegressor::new(width, priors.latency_ms),
            cost: LogRegressor::new(width, priors.cost),
            quality: LogisticClassifier::new(width, priors.quality),
        }
    }
}

impl QosModel for OnlineLinearModel {
    fn predict(&self, x: &FeatureVector) -> QosEstimate {
        let z = self.standardizer.transform(&x.to_vec());
        QosEstimate {
            latency_ms: self.latency.predict(&z),
            cost: self.cost.predict(&z),
            quality: self.quality.predict(&z),
        }
        .clamped()
    }

    fn learn(&mut self, x: &FeatureVector, obs: &Observation) {
        let raw = x.to_vec();
        self.standardizer.observe(&raw);
        let z = self.standardizer.transform(&raw);
        self.latency.learn(&z, obs.latency_ms, self.learning_rate);
        self.cost.learn(&z, obs.cost, self.learning_rate);
        self.quality.learn(&z, obs.correct, self.learning_rate);
        self.observations += 1;
    }

    fn observations(&self) -> u64 {
        self.observations
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AgentPredictor {
    priors: QosEstimate,
    model: OnlineLinearModel,
}

/// One independent QoS model per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorPool {
    version: u32,
    config: PredictorConfig,
    domains: DomainSet,
    agents: BTreeMap<String, AgentPredictor>,
}

impl PredictorPool {
    pub fn new(config: PredictorConfig, domains: DomainSet) -> Self {
        PredictorPool { version: SNAPSHOT_VERSION, config, domains, agents: BTreeMap::new() }
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    pub fn domains(&self) -> &DomainSet {
        &self.domains
    }

    /// Adds an agent with the pool-wide priors or its own.
    pub fn register(&mut self, agent: &str, priors: Option<QosEstimate>) {
        let priors = priors.unwrap_or(self.config.priors);
        let width = FeatureVector::SCALAR_FEATURES + self.domains.width();
        let model = OnlineLinearModel::new(width, &priors, self.config.learning_rate);
        self.agents.insert(agent.to_string(), AgentPredictor { priors, model });
    }

    pub fn contains(&self, agent: &str) -> bool {
        self.agents.contains_key(agent)
    }

    pub fn observations(&self, agent: &str) -> Result<u64, PredictorError> {
        Ok(self.get(agent)?.model.observations())
    }

    pub fn priors(&self, agent: &str) -> Result<QosEstimate, PredictorError> {
        Ok(self.get(agent)?.priors)
    }

    /// Priors until the agent has `min_observations`, model output after.
    pub fn predict(&self, agent: &str, x: &FeatureVector) -> Result<QosEstimate, PredictorError> {
        let p = self.get(agent)?;
        if p.model.observations() < self.config.min_observations {
            return Ok(p.priors);
        }
        Ok(p.model.predict(x))
    }

    pub fn update(&mut self, agent: &str, x: &FeatureVector, obs: &Observation) -> Result<(), PredictorError> {
        let p = self.agents.get_mut(agent).ok_or_else(|| PredictorError::UnknownAgent { agent: agent.to_string() })?;
        p.model.learn(x, obs);
        Ok(())
    }

    fn get(&self, agent: &str) -> Result<&AgentPredictor, PredictorError> {
        self.agents.get(agent).ok_or_else(|| PredictorError::UnknownAgent { agent: agent.to_string() })
    }

    /// Versioned JSON checkpoint of every agent's weights and statistics.
    pub fn snapshot(&self) -> String {
        serde_json::to_string(self).expect("pool state is always serializable")
    }

    pub fn restore(text: &str) -> Result<PredictorPool, PredictorError> {
        let pool: PredictorPool = serde_json::from_str(text).map_err(|e| PredictorError::Snapshot(e.to_string()))?;
        if pool.version != SNAPSHOT_VERSION {
            return Err(PredictorError::Snapshot(format!("unsupported snapshot version {}", pool.version)));
        }
        Ok(pool)
    }
}
