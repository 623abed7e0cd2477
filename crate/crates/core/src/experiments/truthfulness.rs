use std::collections::BTreeMap;

use rand::Rng;

use super::{ExperimentError, ExperimentKind, ExperimentOutput, Summary};
use crate::config::Config;
use crate::mechanism::{run_auction, AgentSlots, MatchProblem, Money};
use crate::predictor::{valuation, QosEstimate, ValuationConfig};
use crate::simnet::{apply_strategy, RngStreams, StrategyKind};

#[derive(Debug, Clone, PartialEq)]
pub struct TruthfulnessResult {
    pub output: ExperimentOutput,
    /// Focal client's cumulative utility after the last round, per strategy.
    pub cumulative: BTreeMap<StrategyKind, f64>,
    /// Rounds in which some misreport beat the honest report.
    pub dsic_violations: usize,
}

impl TruthfulnessResult {
    pub fn honest_dominates(&self) -> bool {
        let honest = self.cumulative[&StrategyKind::Honest];
        self.cumulative.values().all(|&u| honest >= u)
    }
}

struct Edge {
    v_true: f64,
    cost: f64,
}

fn draw(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[0] < r[1] {
        rng.gen_range(r[0]..r[1])
    } else {
        r[0]
    }
}

/// Repeated contended auctions. Client 0 is the focal client; every round
/// it is evaluated under each strategy against the same opponent reports,
/// so the strategies differ only in what the focal client says.
pub fn truthfulness(cfg: &Config, seed: u64) -> Result<TruthfulnessResult, ExperimentError> {
    let t = &cfg.truthfulness;
    let streams = RngStreams::new(seed);
    let mut market = streams.stream(RngStreams::MARKET);
    let mut opponent_rng = streams.stream(RngStreams::STRATEGY);
    let mut focal_rng = streams.indexed(RngStreams::STRATEGY, 0);
    let val = ValuationConfig { value_scale: t.value_scale, ..cfg.router.valuation };

    let n_clients = 1 + t.opponents.len();
    let clients: Vec<String> = (0..n_clients).map(|j| format!("c{j}")).collect();
    let agents: Vec<AgentSlots> =
        (0..t.agents).map(|i| AgentSlots { id: format!("a{i}"), capacity: t.capacity }).collect();

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record([
        "round",
        "strategy",
        "agent",
        "v_true",
        "v_reported",
        "cost",
        "payment",
        "utility",
        "cumulative_utility",
    ])
    .expect("in-memory write");
    let mut cumulative: BTreeMap<StrategyKind, Money> = StrategyKind::ALL.iter().map(|&s| (s, Money::ZERO)).collect();
    let mut matched: BTreeMap<StrategyKind, usize> = StrategyKind::ALL.iter().map(|&s| (s, 0)).collect();
    let mut dsic_violations = 0;

    for round in 1..=t.rounds {
        let edges: Vec<Vec<Edge>> = (0..n_clients)
            .map(|_| {
                (0..t.agents)
                    .map(|_| {
                        let estimate = QosEstimate {
                            quality: draw(&mut market, t.quality_range),
                            latency_ms: draw(&mut market, t.latency_range_ms),
                            cost: draw(&mut market, t.cost_range),
                        };
                        Edge { v_true: valuation(&estimate, &val), cost: estimate.cost }
                    })
                    .collect()
            })
            .collect();
        let opponent_factors: Vec<f64> =
            t.opponents.iter().map(|&kind| apply_strategy(1.0, &t.strategy(kind), &mut opponent_rng)).collect();
        let focal_random = apply_strategy(1.0, &t.strategy(StrategyKind::Random), &mut focal_rng);

        let mut honest_utility = Money::ZERO;
        for kind in StrategyKind::ALL {
            let focal_factor = match kind {
                StrategyKind::Random => focal_random,
                other => apply_strategy(1.0, &t.strategy(other), &mut focal_rng),
            };
            let mut problem = MatchProblem::new(clients.clone(), agents.clone());
            for (j, row) in edges.iter().enumerate() {
                let factor = if j == 0 { focal_factor } else { opponent_factors[j - 1] };
                for (i, e) in row.iter().enumerate() {
                    problem.add_edge(j, i, factor * e.v_true, e.cost)?;
                }
            }
            let (alloc, payments) = run_auction(&problem)?;
            let (agent, v_true, v_reported, cost, payment, utility) = match alloc.assignment_of(0) {
                Some(a) => {
                    let e = &edges[0][a.agent];
                    let edge = problem.edges()[a.edge];
                    let payment = payments.payment_of(0);
                    let v_true = Money::from_currency(e.v_true).expect("finite valuation");
                    (agents[a.agent].id.as_str(), v_true, edge.value, edge.cost, payment, v_true - payment)
                }
                None => ("", Money::ZERO, Money::ZERO, Money::ZERO, Money::ZERO, Money::ZERO),
            };
            if !agent.is_empty() {
                *matched.get_mut(&kind).expect("all strategies tracked") += 1;
            }
            if kind == StrategyKind::Honest {
                honest_utility = utility;
            } else if utility > honest_utility {
                dsic_violations += 1;
            }
            let total = cumulative.get_mut(&kind).expect("all strategies tracked");
            *total += utility;
            let fmt = |m: Money| format!("{:.6}", m.to_currency());
            csv.write_record([
                round.to_string(),
                kind.name().to_string(),
                agent.to_string(),
                fmt(v_true),
                fmt(v_reported),
                fmt(cost),
                fmt(payment),
                fmt(utility),
                fmt(*total),
            ])
            .expect("in-memory write");
        }
    }

    let cumulative: BTreeMap<StrategyKind, f64> = cumulative.into_iter().map(|(k, m)| (k, m.to_currency())).collect();
    let mut summary = Summary::default();
    summary.push("experiment", ExperimentKind::Truthfulness);
    summary.push("seed", seed);
    summary.push("rounds", t.rounds);
    summary.push("clients", n_clients);
    summary.push("agents", t.agents);
    for kind in StrategyKind::ALL {
        summary.push(format!("{}.cumulative_utility", kind.name()), format!("{:.6}", cumulative[&kind]));
        summary.push(format!("{}.rounds_matched", kind.name()), matched[&kind]);
    }
    let mut result = TruthfulnessResult {
        output: ExperimentOutput {
            kind: ExperimentKind::Truthfulness,
            seed,
            metrics_csv: String::from_utf8(csv.into_inner().expect("in-memory flush")).expect("csv output is utf-8"),
            summary,
            extra_files: Vec::new(),
        },
        cumulative,
        dsic_violations,
    };
    let dominates = result.honest_dominates();
    result.output.summary.push("honest_dominates", dominates);
    result.output.summary.push("dsic_violations", dsic_violations);
    Ok(result)
}
