use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AgentProfile, RouterError};

/// Partition of agents and request domains into independent hubs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HubConfig {
    pub hubs: usize,
    /// agent id → hub.
    pub membership: BTreeMap<String, usize>,
    /// domain tag → hub.
    pub classifier: BTreeMap<String, usize>,
    /// Hub for tags the classifier does not know.
    pub default_hub: usize,
}

impl HubConfig {
    /// Every agent in hub 0.
    pub fn single<'a>(agents: impl IntoIterator<Item = &'a AgentProfile>) -> Self {
        HubConfig {
            hubs: 1,
            membership: agents.into_iter().map(|a| (a.id.clone(), 0)).collect(),
            classifier: BTreeMap::new(),
            default_hub: 0,
        }
    }

    pub fn validate(&self, agents: &[AgentProfile]) -> Result<(), RouterError> {
        let bad = |reason: String| RouterError::HubConfig { reason };
        if self.hubs == 0 {
            return Err(bad("at least one hub is required".into()));
        }
        if self.default_hub >= self.hubs {
            return Err(bad(format!("default hub {} out of range", self.default_hub)));
        }
        for a in agents {
            match self.membership.get(&a.id) {
                None => return Err(bad(format!("agent `{}` belongs to no hub", a.id))),
                Some(&h) if h >= self.hubs => return Err(bad(format!("agent `{}` assigned to missing hub {h}", a.id))),
                Some(_) => {}
            }
        }
        if let Some((d, h)) = self.classifier.iter().find(|(_, &h)| h >= self.hubs) {
            return Err(bad(format!("domain `{d}` routed to missing hub {h}")));
        }
        Ok(())
    }

    pub fn hub_of_agent(&self, agent: &str) -> Option<usize> {
        self.membership.get(agent).copied()
    }
}

/// Hub for a request's domain tag.
pub fn classify_request(domain: &str, hubs: &HubConfig) -> usize {
    if hubs.hubs <= 1 {
        return 0;
    }
    hubs.classifier.get(domain).copied().unwrap_or(hubs.default_hub)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HubScheme {
    /// Domains sorted by name are dealt round-robin to hubs; agents follow their domain.
    Domain,
    /// Agents dealt round-robin regardless of domain.
    FullMix,
}

fn distinct_domains(agents: &[AgentProfile]) -> Vec<String> {
    agents.iter().map(|a| a.domain.clone()).collect::<BTreeSet<_>>().into_iter().collect()
}

pub fn build_hubs(agents: &[AgentProfile], k: usize, scheme: HubScheme) -> Result<HubConfig, RouterError> {
    let domains = distinct_domains(agents);
    let limit = match scheme {
        HubScheme::Domain => domains.len().max(1),
        HubScheme::FullMix => agents.len().max(1),
    };
    if k == 0 || k > limit {
        return Err(RouterError::HubConfig { reason: format!("K={k} outside 1..={limit}") });
    }
    let classifier: BTreeMap<String, usize> = domains.iter().enumerate().map(|(i, d)| (d.clone(), i % k)).collect();
    let membership = match scheme {
        HubScheme::Domain => agents.iter().map(|a| (a.id.clone(), classifier[&a.domain])).collect(),
        HubScheme::FullMix => agents.iter().enumerate().map(|(i, a)| (a.id.clone(), i % k)).collect(),
    };
    Ok(HubConfig { hubs: k, membership, classifier, default_hub: 0 })
}
