use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::router::{AgentProfile, HubConfig};

/// How agents and tasks are aligned with hubs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterScheme {
    /// Agents and tasks both dealt round-robin.
    FullMix,
    /// Agents and tasks both grouped by domain.
    Ideal,
    /// Agents grouped by domain, tasks dealt round-robin.
    TaskMix,
    /// Tasks grouped by domain, agents dealt round-robin.
    AgentMix,
}

impl ClusterScheme {
    pub const ALL: [ClusterScheme; 4] =
        [ClusterScheme::Ideal, ClusterScheme::FullMix, ClusterScheme::TaskMix, ClusterScheme::AgentMix];

    pub fn name(self) -> &'static str {
        match self {
            ClusterScheme::FullMix => "full_mix",
            ClusterScheme::Ideal => "ideal",
            ClusterScheme::TaskMix => "task_mix",
            ClusterScheme::AgentMix => "agent_mix",
        }
    }

    fn agents_by_domain(self) -> bool {
        matches!(self, ClusterScheme::Ideal | ClusterScheme::TaskMix)
    }

    fn tasks_by_domain(self) -> bool {
        matches!(self, ClusterScheme::Ideal | ClusterScheme::AgentMix)
    }
}

/// Hub layout plus the hub each task was sent to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeAssignment {
    pub hubs: HubConfig,
    pub task_hubs: Vec<usize>,
}

/// Splits `agents` and tasks (given by their domain tags) over `k` hubs.
/// Domain grouping deals sorted domain names round-robin to hubs.
pub fn build_scheme(
    agents: &[AgentProfile],
    task_domains: &[String],
    k: usize,
    scheme: ClusterScheme,
) -> SchemeAssignment {
    let k = k.max(1);
    let domains: BTreeSet<&str> =
        agents.iter().map(|a| a.domain.as_str()).chain(task_domains.iter().map(String::as_str)).collect();
    let domain_hub: BTreeMap<String, usize> =
        domains.into_iter().enumerate().map(|(i, d)| (d.to_string(), i % k)).collect();
    let membership = agents
        .iter()
        .enumerate()
        .map(|(i, a)| (a.id.clone(), if scheme.agents_by_domain() { domain_hub[&a.domain] } else { i % k }))
        .collect();
    let task_hubs = task_domains
        .iter()
        .enumerate()
        .map(|(t, d)| if scheme.tasks_by_domain() { domain_hub[d] } else { t % k })
        .collect();
    let classifier = if scheme.tasks_by_domain() { domain_hub } else { BTreeMap::new() };
    SchemeAssignment { hubs: HubConfig { hubs: k, membership, classifier, default_hub: 0 }, task_hubs }
}
