//! Flow-network reduction of the assignment problem and the successive
//! shortest path solver that runs on it.
//!
//! Node layout: `0` is the source, `1..=C` are clients, `C+1..=C+A` are
//! agents and `C+A+1` is the sink. Arcs are emitted source→client first,
//! then client→agent in edge order, then agent→sink.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use super::{MatchProblem, MechanismError};

/// Largest capacity an arc may carry.
pub const MAX_ARC_CAPACITY: u64 = i32::MAX as u64;

const INF: i64 = i64::MAX / 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub capacity: i64,
    pub cost: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowNetwork {
    pub nodes: usize,
    pub arcs: Vec<FlowArc>,
    pub source: usize,
    pub sink: usize,
    /// Index of the first client→agent arc; these follow the source arcs.
    pub first_edge_arc: usize,
}

impl FlowNetwork {
    pub fn client_node(&self, client: usize) -> usize {
        1 + client
    }

    /// Line-oriented dump, one arc per line, for golden tests.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nodes {} source {} sink {}", self.nodes, self.source, self.sink);
        for a in &self.arcs {
            let _ = writeln!(out, "arc {} {} cap {} cost {}", a.from, a.to, a.capacity, a.cost);
        }
        out
    }
}

/// Reduces `problem` to a flow network whose client→agent arc costs are the
/// negated welfare in micro-units.
pub fn build_flow_network(problem: &MatchProblem) -> Result<FlowNetwork, MechanismError> {
    problem.validate()?;
    let n_clients = problem.clients().len();
    let n_agents = problem.agents().len();
    let source = 0;
    let sink = n_clients + n_agents + 1;
    let agent_node = |a: usize| 1 + n_clients + a;

    let mut arcs = Vec::with_capacity(n_clients + problem.edges().len() + n_agents);
    for c in 0..n_clients {
        arcs.push(FlowArc { from: source, to: 1 + c, capacity: 1, cost: 0 });
    }
    let first_edge_arc = arcs.len();
    for e in problem.edges() {
        arcs.push(FlowArc { from: 1 + e.client, to: agent_node(e.agent), capacity: 1, cost: -e.welfare().micros() });
    }
    for (a, slots) in problem.agents().iter().enumerate() {
        if u64::from(slots.capacity) > MAX_ARC_CAPACITY {
            return Err(MechanismError::CapacityOverflow {
                agent: slots.id.clone(),
                capacity: u64::from(slots.capacity),
            });
        }
        arcs.push(FlowArc { from: agent_node(a), to: sink, capacity: i64::from(slots.capacity), cost: 0 });
    }

    Ok(FlowNetwork { nodes: sink + 1, arcs, source, sink, first_edge_arc })
}

/// Residual graph with paired forward/backward arcs (`2k` forward, `2k+1` backward).
struct Residual {
    head: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    fn new(network: &FlowNetwork) -> Self {
        let m = network.arcs.len();
        let mut r = Residual {
            head: Vec::with_capacity(2 * m),
            to: Vec::with_capacity(2 * m),
            cap: Vec::with_capacity(2 * m),
            cost: Vec::with_capacity(2 * m),
            adj: vec![Vec::new(); network.nodes],
        };
        for arc in &network.arcs {
            let id = r.to.len();
            r.head.extend([arc.from, arc.to]);
            r.to.extend([arc.to, arc.from]);
            r.cap.extend([arc.capacity, 0]);
            r.cost.extend([arc.cost, -arc.cost]);
            r.adj[arc.from].push(id);
            r.adj[arc.to].push(id + 1);
        }
        r
    }

    /// Bellman-Ford (queue based) distances from `source`; these seed the
    /// Johnson potentials so Dijkstra can run over negative arc costs.
    fn bellman_ford(&self, source: usize) -> Vec<i64> {
        let n = self.adj.len();
        let mut dist = vec![INF; n];
        let mut queued = vec![false; n];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        queued[source] = true;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            for &e in &self.adj[u] {
                if self.cap[e] <= 0 {
                    continue;
                }
                let v = self.to[e];
                let nd = dist[u] + self.cost[e];
                if nd < dist[v] {
                    dist[v] = nd;
                    if !queued[v] {
                        queued[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        dist
    }

    /// Dijkstra on reduced costs. Predecessors only change on strict
    /// improvement, so the first-discovered shortest path wins ties.
    fn dijkstra(&self, source: usize, potential: &[i64], dist: &mut [i64], parent: &mut [usize]) {
        dist.fill(INF);
        parent.fill(usize::MAX);
        dist[source] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0i64, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &e in &self.adj[u] {
                if self.cap[e] <= 0 {
                    continue;
                }
                let v = self.to[e];
                if potential[v] >= INF {
                    continue;
                }
                let nd = d + self.cost[e] + potential[u] - potential[v];
                if nd < dist[v] {
                    dist[v] = nd;
                    parent[v] = e;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
    }
}

/// Successive shortest paths in max-weight mode: augmentation halts as soon
/// as the cheapest source→sink path has non-negative cost, so the returned
/// flow minimizes total cost over all flow values rather than maximizing
/// flow. Returns the flow on each arc of `network`, in arc order.
pub fn min_cost_max_weight_flow(network: &FlowNetwork) -> Result<Vec<i64>, MechanismError> {
    if let Some((index, arc)) = network.arcs.iter().enumerate().find(|(_, a)| a.capacity < 0) {
        return Err(MechanismError::MalformedArc { index, capacity: arc.capacity });
    }
    let mut res = Residual::new(network);
    let n = network.nodes;
    let (s, t) = (network.source, network.sink);
    if n == 0 || s == t {
        return Ok(vec![0; network.arcs.len()]);
    }

    let mut potential = res.bellman_ford(s);
    let mut dist = vec![INF; n];
    let mut parent = vec![usize::MAX; n];

    loop {
        res.dijkstra(s, &potential, &mut dist, &mut parent);
        if dist[t] >= INF {
            break;
        }
        // Actual path cost: reduced distance plus the potential difference.
        let path_cost = dist[t] + potential[t] - potential[s];
        if path_cost >= 0 {
            break;
        }
        for v in 0..n {
            if dist[v] < INF {
                potential[v] += dist[v];
            }
        }
        let mut bottleneck = INF;
        let mut v = t;
        while v != s {
            let e = parent[v];
            bottleneck = bottleneck.min(res.cap[e]);
            v = res.head[e];
        }
        let mut v = t;
        while v != s {
            let e = parent[v];
            res.cap[e] -= bottleneck;
            res.cap[e ^ 1] += bottleneck;
            v = res.head[e];
        }
    }

    Ok((0..network.arcs.len()).map(|k| res.cap[2 * k + 1]).collect())
}
