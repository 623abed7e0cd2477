use serde::{Deserialize, Serialize};

/// Configured domain tags; one-hot encodings reserve a trailing slot for
/// tags outside the list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSet {
    names: Vec<String>,
}

impl DomainSet {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        DomainSet { names: names.into_iter().map(Into::into).collect() }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Width of the one-hot encoding, including the "other" slot.
    pub fn width(&self) -> usize {
        self.names.len() + 1
    }

    pub fn slot(&self, tag: &str) -> usize {
        self.names.iter().position(|n| n == tag).unwrap_or(self.names.len())
    }

    pub fn one_hot(&self, tag: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.width()];
        v[self.slot(tag)] = 1.0;
        v
    }
}

/// Router-wide load at routing time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadSnapshot {
    pub router_inflight: u32,
    /// Requests per second over the rate window.
    pub router_rate: f64,
}

/// Load of one candidate agent at routing time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AgentLoad {
    pub inflight: u32,
    pub rate: f64,
    pub capacity: u32,
}

/// Predictor input for one (request, agent) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub prompt_chars: usize,
    pub turn: u32,
    pub affinity: f64,
    pub router_inflight: u32,
    pub router_rate: f64,
    pub agent_inflight: u32,
    pub agent_rate: f64,
    pub capacity: u32,
    pub utilization: f64,
    pub domain: Vec<f64>,
}

impl FeatureVector {
    /// Number of numeric features ahead of the domain one-hot.
    pub const SCALAR_FEATURES: usize = 9;

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::SCALAR_FEATURES + self.domain.len());
        v.extend([
            self.prompt_chars as f64,
            f64::from(self.turn),
            self.affinity,
            f64::from(self.router_inflight),
            self.router_rate,
            f64::from(self.agent_inflight),
            self.agent_rate,
            f64::from(self.capacity),
            self.utilization,
        ]);
        v.extend_from_slice(&self.domain);
        v
    }

    pub fn len(&self) -> usize {
        Self::SCALAR_FEATURES + self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// What the router knows about a request when building features.
#[derive(Debug, Clone, Copy)]
pub struct RequestFeatures<'a> {
    pub prompt_chars: usize,
    pub turn: u32,
    pub domain: &'a str,
}

pub fn featurize(
    request: RequestFeatures<'_>,
    agent: AgentLoad,
    affinity: f64,
    load: LoadSnapshot,
    domains: &DomainSet,
) -> FeatureVector {
    FeatureVector {
        prompt_chars: request.prompt_chars,
        turn: request.turn,
        affinity: affinity.clamp(0.0, 1.0),
        router_inflight: load.router_inflight,
        router_rate: load.router_rate.max(0.0),
        agent_inflight: agent.inflight,
        agent_rate: agent.rate.max(0.0),
        capacity: agent.capacity,
        utilization: f64::from(agent.inflight) / f64::from(agent.capacity.max(1)),
        domain: domains.one_hot(request.domain),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(inflight: u32, capacity: u32) -> FeatureVector {
        featurize(
            RequestFeatures { prompt_chars: 10, turn: 1, domain: "math" },
            AgentLoad { inflight, rate: 0.0, capacity },
            0.0,
            LoadSnapshot::default(),
            &DomainSet::new(["code", "math"]),
        )
    }

    #[test]
    fn utilization_uses_guarded_capacity() {
        assert_eq!(features(3, 4).utilization, 0.75);
        assert_eq!(features(3, 0).utilization, 3.0);
    }

    #[test]
    fn fresh_system_has_zero_router_load() {
        let x = features(0, 4);
        assert_eq!((x.router_inflight, x.router_rate, x.turn), (0, 0.0, 1));
    }

    #[test]
    fn domain_one_hot_with_other_slot() {
        let d = DomainSet::new(["code", "math"]);
        assert_eq!(d.one_hot("math"), vec![0.0, 1.0, 0.0]);
        assert_eq!(d.one_hot("poetry"), vec![0.0, 0.0, 1.0]);
        let x = features(1, 2);
        assert_eq!(x.to_vec().len(), FeatureVector::SCALAR_FEATURES + 3);
        assert_eq!(&x.to_vec()[..3], &[10.0, 1.0, 0.0]);
    }
}
