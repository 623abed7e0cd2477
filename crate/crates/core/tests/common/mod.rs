#![allow(dead_code)]

use hubroute_core::mechanism::{AgentSlots, MatchProblem, Money};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(value, cost)` in micros per client and agent; `None` means no edge.
pub type Table = Vec<Vec<Option<(i64, i64)>>>;

#[derive(Debug, Clone)]
pub struct Instance {
    pub capacities: Vec<u32>,
    pub table: Table,
}

impl Instance {
    pub fn clients(&self) -> usize {
        self.table.len()
    }

    /// Builds the matcher input with client `j`'s values multiplied by `factor`.
    pub fn problem_with(&self, j: usize, factor: f64) -> MatchProblem {
        let clients = (0..self.clients()).map(|c| format!("c{c}")).collect();
        let agents = self
            .capacities
            .iter()
            .enumerate()
            .map(|(i, &capacity)| AgentSlots { id: format!("a{i}"), capacity })
            .collect();
        let mut p = MatchProblem::new(clients, agents);
        for (c, row) in self.table.iter().enumerate() {
            for (a, cell) in row.iter().enumerate() {
                if let Some((v, cost)) = *cell {
                    let v = if c == j { (v as f64 * factor).round() as i64 } else { v };
                    p.add_edge_money(c, a, Money::from_micros(v), Money::from_micros(cost)).unwrap();
                }
            }
        }
        p
    }

    pub fn problem(&self) -> MatchProblem {
        self.problem_with(usize::MAX, 1.0)
    }
}

/// Random instance with at most 6 clients, 5 agents and capacity 3. Half
/// the instances use small integer amounts so that ties are common.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=5);
    let coarse = rng.gen_bool(0.5);
    let density = rng.gen_range(0.3..=1.0);
    let capacities = (0..m).map(|_| rng.gen_range(0..=3)).collect();
    let table = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    rng.gen_bool(density).then(|| {
                        if coarse {
                            (rng.gen_range(0..=10) * 1_000_000, rng.gen_range(0..=6) * 1_000_000)
                        } else {
                            (rng.gen_range(0..=20_000_000), rng.gen_range(0..=10_000_000))
                        }
                    })
                })
                .collect()
        })
        .collect();
    Instance { capacities, table }
}

pub fn instances(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng)).collect()
}

/// Exhaustive maximum welfare, written independently of the library:
/// every client either stays out or takes one agent with a free slot.
/// Only non-negative edges count, matching the matcher's pruning rule.
pub fn oracle_welfare(problem: &MatchProblem) -> i64 {
    fn go(client: usize, n: usize, adj: &[Vec<(usize, i64)>], free: &mut [u32]) -> i64 {
        if client == n {
            return 0;
        }
        let mut best = go(client + 1, n, adj, free);
        for &(a, w) in &adj[client] {
            if free[a] > 0 {
                free[a] -= 1;
                best = best.max(w + go(client + 1, n, adj, free));
                free[a] += 1;
            }
        }
        best
    }
    let n = problem.clients().len();
    let mut adj = vec![Vec::new(); n];
    for e in problem.edges() {
        let w = e.value.micros() - e.cost.micros();
        if w >= 0 {
            adj[e.client].push((e.agent, w));
        }
    }
    let mut free: Vec<u32> = problem.agents().iter().map(|a| a.capacity).collect();
    go(0, n, &adj, &mut free)
}
