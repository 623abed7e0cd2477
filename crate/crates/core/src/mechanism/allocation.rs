use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::flow::{build_flow_network, min_cost_max_weight_flow};
use super::{MatchProblem, MechanismError, Money};

/// Largest instance the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_CLIENTS: usize = 8;
pub const BRUTE_FORCE_MAX_AGENTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub client: usize,
    pub agent: usize,
    /// Index into `MatchProblem::edges`.
    pub edge: usize,
    pub welfare: Money,
}

/// Chosen assignment of one matching round. `matches` is sorted by client.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub matches: Vec<Assignment>,
    pub total_welfare: Money,
}

impl Allocation {
    fn from_edges(problem: &MatchProblem, mut chosen: Vec<usize>) -> Allocation {
        chosen.sort_by_key(|&e| (problem.edges()[e].client, problem.edges()[e].agent));
        let matches: Vec<Assignment> = chosen
            .into_iter()
            .map(|e| {
                let edge = problem.edges()[e];
                Assignment { client: edge.client, agent: edge.agent, edge: e, welfare: edge.welfare() }
            })
            .collect();
        let total_welfare = matches.iter().map(|m| m.welfare).sum();
        Allocation { matches, total_welfare }
    }

    pub fn agent_of(&self, client: usize) -> Option<usize> {
        self.matches.iter().find(|m| m.client == client).map(|m| m.agent)
    }

    pub fn assignment_of(&self, client: usize) -> Option<&Assignment> {
        self.matches.iter().find(|m| m.client == client)
    }

    /// Checks the per-client and per-agent constraints against `problem`.
    pub fn is_feasible(&self, problem: &MatchProblem) -> bool {
        let mut per_client = vec![0u32; problem.clients().len()];
        let mut per_agent = vec![0u32; problem.agents().len()];
        for m in &self.matches {
            let Some(edge) = problem.edges().get(m.edge) else { return false };
            if edge.client != m.client || edge.agent != m.agent {
                return false;
            }
            per_client[m.client] += 1;
            per_agent[m.agent] += 1;
        }
        per_client.iter().all(|&n| n <= 1) && per_agent.iter().zip(problem.agents()).all(|(&n, a)| n <= a.capacity)
    }

    /// One assignment per line, for golden tests.
    pub fn dump(&self, problem: &MatchProblem) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "W={}", self.total_welfare);
        for m in &self.matches {
            let _ = writeln!(
                out,
                "assign {} -> {} w={}",
                problem.clients()[m.client],
                problem.agents()[m.agent].id,
                m.welfare
            );
        }
        out
    }
}

/// Welfare-maximizing allocation via the min-cost flow reduction.
pub fn solve_allocation(problem: &MatchProblem) -> Result<Allocation, MechanismError> {
    let network = build_flow_network(problem)?;
    let flow = min_cost_max_weight_flow(&network)?;
    let first = network.first_edge_arc;
    let chosen = (0..problem.edges().len()).filter(|&e| flow[first + e] > 0).collect();
    Ok(Allocation::from_edges(problem, chosen))
}

/// Exhaustive search over every feasible assignment.
///
/// Clients are visited in order; each tries its edges in input order and
/// then "unmatched". A candidate replaces the incumbent only on strictly
/// higher welfare, so among equal-welfare optima the one found first wins.
pub fn brute_force_matching(problem: &MatchProblem) -> Result<Allocation, MechanismError> {
    problem.validate()?;
    let (nc, na) = (problem.clients().len(), problem.agents().len());
    if nc > BRUTE_FORCE_MAX_CLIENTS || na > BRUTE_FORCE_MAX_AGENTS {
        return Err(MechanismError::InstanceTooLarge { clients: nc, agents: na });
    }
    let mut by_client: Vec<Vec<usize>> = vec![Vec::new(); nc];
    for (i, e) in problem.edges().iter().enumerate() {
        by_client[e.client].push(i);
    }

    struct Search<'a> {
        problem: &'a MatchProblem,
        by_client: Vec<Vec<usize>>,
        remaining: Vec<u32>,
        current: Vec<usize>,
        best: Option<(Money, Vec<usize>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, client: usize, welfare: Money) {
            if client == self.by_client.len() {
                if self.best.as_ref().is_none_or(|(w, _)| welfare > *w) {
                    self.best = Some((welfare, self.current.clone()));
                }
                return;
            }
            for k in 0..self.by_client[client].len() {
                let e = self.by_client[client][k];
                let edge = self.problem.edges()[e];
                if self.remaining[edge.agent] == 0 {
                    continue;
                }
                self.remaining[edge.agent] -= 1;
                self.current.push(e);
                self.visit(client + 1, welfare + edge.welfare());
                self.current.pop();
                self.remaining[edge.agent] += 1;
            }
            self.visit(client + 1, welfare);
        }
    }

    let mut search = Search {
        problem,
        by_client,
        remaining: problem.agents().iter().map(|a| a.capacity).collect(),
        current: Vec::new(),
        best: None,
    };
    search.visit(0, Money::ZERO);
    let chosen = search.best.map(|(_, edges)| edges).unwrap_or_default();
    Ok(Allocation::from_edges(problem, chosen))
}
