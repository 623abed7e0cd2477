use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{MechanismError, Money};

/// An agent on the supply side of a matching round, with its free slots `q_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSlots {
    pub id: String,
    pub capacity: u32,
}

/// Candidate (client, agent) pair with its scalarized value and predicted cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WelfareEdge {
    pub client: usize,
    pub agent: usize,
    pub value: Money,
    pub cost: Money,
}

impl WelfareEdge {
    pub fn welfare(&self) -> Money {
        self.value - self.cost
    }
}

/// One round of the many-to-many assignment problem.
///
/// Clients and agents are addressed by position; `edges` reference those
/// positions. Negative-welfare edges never enter a problem: [`add_edge`]
/// drops them and reports that it did.
///
/// [`add_edge`]: MatchProblem::add_edge
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchProblem {
    clients: Vec<String>,
    agents: Vec<AgentSlots>,
    edges: Vec<WelfareEdge>,
}

impl MatchProblem {
    pub fn new(clients: Vec<String>, agents: Vec<AgentSlots>) -> Self {
        MatchProblem { clients, agents, edges: Vec::new() }
    }

    pub fn clients(&self) -> &[String] {
        &self.clients
    }

    pub fn agents(&self) -> &[AgentSlots] {
        &self.agents
    }

    pub fn edges(&self) -> &[WelfareEdge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.clients.is_empty() && self.agents.is_empty()
    }

    /// Adds a candidate pair given currency amounts.
    ///
    /// Returns `Ok(false)` when the pair has negative welfare and was pruned.
    pub fn add_edge(&mut self, client: usize, agent: usize, value: f64, cost: f64) -> Result<bool, MechanismError> {
        let value = Money::from_currency(value).ok_or(MechanismError::NonFiniteCurrency { value })?;
        let cost = Money::from_currency(cost).ok_or(MechanismError::NonFiniteCurrency { value: cost })?;
        self.add_edge_money(client, agent, value, cost)
    }

    pub fn add_edge_money(
        &mut self,
        client: usize,
        agent: usize,
        value: Money,
        cost: Money,
    ) -> Result<bool, MechanismError> {
        if client >= self.clients.len() {
            return Err(MechanismError::UnknownClient { index: client });
        }
        if agent >= self.agents.len() {
            return Err(MechanismError::UnknownAgent { index: agent });
        }
        if self.edges.iter().any(|e| e.client == client && e.agent == agent) {
            return Err(MechanismError::DuplicateEdge {
                client: self.clients[client].clone(),
                agent: self.agents[agent].id.clone(),
            });
        }
        let edge = WelfareEdge { client, agent, value, cost };
        if edge.welfare() < Money::ZERO {
            return Ok(false);
        }
        self.edges.push(edge);
        Ok(true)
    }

    /// Re-checks every invariant. Problems built through [`MatchProblem::add_edge`]
    /// always pass; deserialized ones might not.
    pub fn validate(&self) -> Result<(), MechanismError> {
        let mut seen = HashSet::new();
        for e in &self.edges {
            if e.client >= self.clients.len() {
                return Err(MechanismError::UnknownClient { index: e.client });
            }
            if e.agent >= self.agents.len() {
                return Err(MechanismError::UnknownAgent { index: e.agent });
            }
            if !seen.insert((e.client, e.agent)) {
                return Err(MechanismError::DuplicateEdge {
                    client: self.clients[e.client].clone(),
                    agent: self.agents[e.agent].id.clone(),
                });
            }
            if e.welfare() < Money::ZERO {
                return Err(MechanismError::NegativeWelfare {
                    client: self.clients[e.client].clone(),
                    agent: self.agents[e.agent].id.clone(),
                });
            }
        }
        Ok(())
    }

    /// The same round with client `index` and all of its edges removed.
    pub fn without_client(&self, index: usize) -> MatchProblem {
        let clients = self.clients.iter().enumerate().filter(|(i, _)| *i != index).map(|(_, c)| c.clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| e.client != index)
            .map(|e| WelfareEdge { client: if e.client > index { e.client - 1 } else { e.client }, ..*e })
            .collect();
        MatchProblem { clients, agents: self.agents.clone(), edges }
    }

    /// Parses the line-oriented fixture format:
    ///
    /// ```text
    /// clients 2 agents 1
    /// agent A 1
    /// edge c1 A 10 4
    /// edge c2 A 8 4
    /// ```
    ///
    /// Optional `client <id>` lines fix client order; otherwise clients are
    /// numbered by first appearance in `edge` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<MatchProblem, MechanismError> {
        let parse_err = |line: usize, msg: String| MechanismError::Parse { line, message: msg };
        let mut header: Option<(usize, usize)> = None;
        let mut clients: Vec<String> = Vec::new();
        let mut agents: Vec<AgentSlots> = Vec::new();
        let mut raw_edges: Vec<(usize, String, String, f64, f64)> = Vec::new();

        for (n, raw) in text.lines().enumerate() {
            let lineno = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "clients" => {
                    if fields.len() != 4 || fields[2] != "agents" {
                        return Err(parse_err(lineno, "expected `clients N agents M`".into()));
                    }
                    let n_clients = fields[1]
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad client count `{}`", fields[1])))?;
                    let n_agents =
                        fields[3].parse().map_err(|_| parse_err(lineno, format!("bad agent count `{}`", fields[3])))?;
                    header = Some((n_clients, n_agents));
                }
                "client" if fields.len() == 2 => clients.push(fields[1].to_string()),
                "agent" if fields.len() == 3 => {
                    let capacity: i64 =
                        fields[2].parse().map_err(|_| parse_err(lineno, format!("bad capacity `{}`", fields[2])))?;
                    if capacity < 0 {
                        return Err(MechanismError::NegativeCapacity { agent: fields[1].to_string() });
                    }
                    let capacity = u32::try_from(capacity).map_err(|_| MechanismError::CapacityOverflow {
                        agent: fields[1].to_string(),
                        capacity: capacity as u64,
                    })?;
                    agents.push(AgentSlots { id: fields[1].to_string(), capacity });
                }
                "edge" if fields.len() == 5 => {
                    let v: f64 =
                        fields[3].parse().map_err(|_| parse_err(lineno, format!("bad value `{}`", fields[3])))?;
                    let c: f64 =
                        fields[4].parse().map_err(|_| parse_err(lineno, format!("bad cost `{}`", fields[4])))?;
                    raw_edges.push((lineno, fields[1].to_string(), fields[2].to_string(), v, c));
                }
                other => return Err(parse_err(lineno, format!("unrecognized line starting with `{other}`"))),
            }
        }

        let (n_clients, n_agents) = header.ok_or_else(|| parse_err(0, "missing `clients N agents M` header".into()))?;
        for (_, client, _, _, _) in &raw_edges {
            if !clients.contains(client) {
                clients.push(client.clone());
            }
        }
        if clients.len() > n_clients {
            return Err(parse_err(0, format!("header declares {n_clients} clients but {} are named", clients.len())));
        }
        let mut k = 0;
        while clients.len() < n_clients {
            let name = format!("client{k}");
            if !clients.contains(&name) {
                clients.push(name);
            }
            k += 1;
        }
        if agents.len() != n_agents {
            return Err(parse_err(0, format!("header declares {n_agents} agents but {} are listed", agents.len())));
        }

        let mut problem = MatchProblem::new(clients, agents);
        for (lineno, client, agent, v, c) in raw_edges {
            let ci = problem.clients.iter().position(|x| *x == client).expect("client registered above");
            let ai = problem
                .agents
                .iter()
                .position(|a| a.id == agent)
                .ok_or_else(|| parse_err(lineno, format!("edge references unknown agent `{agent}`")))?;
            problem.add_edge(ci, ai, v, c)?;
        }
        Ok(problem)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "clients {} agents {}", self.clients.len(), self.agents.len());
        for c in &self.clients {
            let _ = writeln!(out, "client {c}");
        }
        for a in &self.agents {
            let _ = writeln!(out, "agent {} {}", a.id, a.capacity);
        }
        for e in &self.edges {
            let _ = writeln!(out, "edge {} {} {} {}", self.clients[e.client], self.agents[e.agent].id, e.value, e.cost);
        }
        out
    }
}
