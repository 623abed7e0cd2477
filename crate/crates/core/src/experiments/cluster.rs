use std::time::Instant;

use rand::Rng;

use super::{ExperimentError, ExperimentKind, ExperimentOutput, Summary};
use crate::config::{ClusterConfig, Config};
use crate::mechanism::{solve_allocation, AgentSlots, MatchProblem, Money};
use crate::predictor::PricingProfile;
use crate::router::{build_hubs, classify_request, AgentProfile, HubConfig, HubScheme};
use crate::simnet::{build_scheme, ClusterScheme, RngStreams};

/// One-shot market: every task can go to every agent, and a pair is worth
/// much more when the domains agree.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMarket {
    pub agents: Vec<AgentProfile>,
    pub task_domains: Vec<String>,
    /// `(value, cost)` indexed by task, then agent.
    pub pairs: Vec<Vec<(Money, Money)>>,
}

fn uniform(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[0] < r[1] {
        rng.gen_range(r[0]..r[1])
    } else {
        r[0]
    }
}

fn money(x: f64) -> Money {
    Money::from_currency(x).expect("market draws are finite")
}

pub fn generate_market(cfg: &ClusterConfig, seed: u64) -> ClusterMarket {
    let mut rng = RngStreams::new(seed).stream(RngStreams::MARKET);
    let domain = |d: usize| format!("d{d}");
    let agents: Vec<AgentProfile> = (0..cfg.agents)
        .map(|i| AgentProfile {
            id: format!("m{i:03}"),
            scale: 1.0,
            domain: domain(rng.gen_range(0..cfg.domains)),
            capacity: rng.gen_range(cfg.capacity_range[0]..=cfg.capacity_range[1]),
            prices: PricingProfile { miss: 0.0, hit: 0.0, out: 0.0 },
        })
        .collect();
    let task_domains: Vec<String> = (0..cfg.tasks).map(|_| domain(rng.gen_range(0..cfg.domains))).collect();
    let pairs = task_domains
        .iter()
        .map(|td| {
            agents
                .iter()
                .map(|a| {
                    let range = if &a.domain == td { cfg.on_domain_value } else { cfg.off_domain_value };
                    let value = uniform(&mut rng, range);
                    (money(value), money(uniform(&mut rng, cfg.cost_range)))
                })
                .collect()
        })
        .collect();
    ClusterMarket { agents, task_domains, pairs }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionResult {
    pub welfare: Money,
    pub matched: usize,
    pub on_domain: usize,
    /// Summed wall time of the per-hub solves.
    pub solver_ms: f64,
}

/// Solves each hub's matching independently. Agents follow `hubs.membership`
/// and task `t` goes to hub `task_hubs[t]`.
pub fn solve_partition(
    market: &ClusterMarket,
    hubs: &HubConfig,
    task_hubs: &[usize],
) -> Result<PartitionResult, ExperimentError> {
    let mut result = PartitionResult { welfare: Money::ZERO, matched: 0, on_domain: 0, solver_ms: 0.0 };
    for h in 0..hubs.hubs {
        let agents: Vec<usize> =
            (0..market.agents.len()).filter(|&i| hubs.membership[&market.agents[i].id] == h).collect();
        let tasks: Vec<usize> = (0..market.task_domains.len()).filter(|&t| task_hubs[t] == h).collect();
        let mut problem = MatchProblem::new(
            tasks.iter().map(|t| format!("t{t:03}")).collect(),
            agents
                .iter()
                .map(|&i| AgentSlots { id: market.agents[i].id.clone(), capacity: market.agents[i].capacity })
                .collect(),
        );
        for (j, &t) in tasks.iter().enumerate() {
            for (k, &i) in agents.iter().enumerate() {
                let (value, cost) = market.pairs[t][i];
                problem.add_edge_money(j, k, value, cost)?;
            }
        }
        let started = Instant::now();
        let alloc = solve_allocation(&problem)?;
        result.solver_ms += started.elapsed().as_secs_f64() * 1e3;
        result.welfare += alloc.total_welfare;
        result.matched += alloc.matches.len();
        result.on_domain += alloc
            .matches
            .iter()
            .filter(|m| market.agents[agents[m.agent]].domain == market.task_domains[tasks[m.client]])
            .count();
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub k: usize,
    pub result: PartitionResult,
    pub welfare_ratio: f64,
}

fn sweep(cfg: &Config, seed: u64) -> Result<Vec<SweepPoint>, ExperimentError> {
    let market = generate_market(&cfg.cluster, seed);
    let mut points: Vec<SweepPoint> = Vec::new();
    let mut base: Option<Money> = None;
    for &k in &cfg.cluster.k_values {
        let hubs = build_hubs(&market.agents, k, HubScheme::Domain)?;
        let task_hubs: Vec<usize> = market.task_domains.iter().map(|d| classify_request(d, &hubs)).collect();
        let result = solve_partition(&market, &hubs, &task_hubs)?;
        if k == 1 {
            base = Some(result.welfare);
        }
        points.push(SweepPoint { k, result, welfare_ratio: f64::NAN });
    }
    // Without a K=1 point the ratio is taken against the first K swept.
    let base = base.or_else(|| points.first().map(|p| p.result.welfare)).unwrap_or(Money::ZERO);
    for p in &mut points {
        p.welfare_ratio = if base > Money::ZERO { p.result.welfare.to_currency() / base.to_currency() } else { 1.0 };
    }
    Ok(points)
}

/// Hub-count sweep under domain clustering. `metrics.csv` omits solver
/// time so that it stays reproducible; `sweep.csv` carries it.
pub fn cluster_sweep(cfg: &Config, seed: u64) -> Result<ExperimentOutput, ExperimentError> {
    let points = sweep(cfg, seed)?;
    let mut metrics = String::from("K,welfare,welfare_ratio_vs_K1,matched\n");
    let mut timed = String::from("K,welfare,welfare_ratio_vs_K1,solver_ms\n");
    let mut summary = Summary::default();
    summary.push("experiment", ExperimentKind::ClusterSweep);
    summary.push("seed", seed);
    summary.push("agents", cfg.cluster.agents);
    summary.push("tasks", cfg.cluster.tasks);
    for p in &points {
        let w = p.result.welfare.to_currency();
        metrics.push_str(&format!("{},{w:.6},{:.6},{}\n", p.k, p.welfare_ratio, p.result.matched));
        timed.push_str(&format!("{},{w:.6},{:.6},{:.3}\n", p.k, p.welfare_ratio, p.result.solver_ms));
        summary.push(format!("k{}.welfare", p.k), format!("{w:.6}"));
        summary.push(format!("k{}.welfare_ratio", p.k), format!("{:.6}", p.welfare_ratio));
    }
    Ok(ExperimentOutput {
        kind: ExperimentKind::ClusterSweep,
        seed,
        metrics_csv: metrics,
        summary,
        extra_files: vec![("sweep.csv".into(), timed)],
    })
}

/// Welfare of each agent/task alignment scheme on the cluster market.
pub fn scheme_compare(cfg: &Config, seed: u64) -> Result<ExperimentOutput, ExperimentError> {
    let market = generate_market(&cfg.cluster, seed);
    let mut metrics = String::from("scheme,welfare,matched,on_domain\n");
    let mut summary = Summary::default();
    summary.push("experiment", ExperimentKind::SchemeCompare);
    summary.push("seed", seed);
    summary.push("hubs", cfg.cluster.scheme_hubs);
    let mut welfare = std::collections::BTreeMap::new();
    for scheme in ClusterScheme::ALL {
        let assignment = build_scheme(&market.agents, &market.task_domains, cfg.cluster.scheme_hubs, scheme);
        let r = solve_partition(&market, &assignment.hubs, &assignment.task_hubs)?;
        let w = r.welfare.to_currency();
        metrics.push_str(&format!("{},{w:.6},{},{}\n", scheme.name(), r.matched, r.on_domain));
        summary.push(format!("{}.welfare", scheme.name()), format!("{w:.6}"));
        welfare.insert(scheme, r.welfare);
    }
    let ideal = welfare[&ClusterScheme::Ideal];
    let full = welfare[&ClusterScheme::FullMix];
    let one_sided = welfare[&ClusterScheme::TaskMix].max(welfare[&ClusterScheme::AgentMix]);
    summary.push("ideal_above_one_sided", ideal >= one_sided);
    summary.push("full_mix_between", ideal >= full && full >= one_sided);
    Ok(ExperimentOutput {
        kind: ExperimentKind::SchemeCompare,
        seed,
        metrics_csv: metrics,
        summary,
        extra_files: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Config {
        let mut cfg = Config::default();
        cfg.cluster =
            ClusterConfig { agents: 12, tasks: 20, domains: 3, k_values: vec![1, 2, 3], scheme_hubs: 3, ..cfg.cluster };
        cfg
    }

    #[test]
    fn market_is_seeded() {
        let c = small().cluster;
        assert_eq!(generate_market(&c, 4), generate_market(&c, 4));
        assert_ne!(generate_market(&c, 4), generate_market(&c, 5));
    }

    #[test]
    fn splitting_never_adds_welfare() {
        let points = sweep(&small(), 0).unwrap();
        assert_eq!(points[0].k, 1);
        assert_eq!(points[0].welfare_ratio, 1.0);
        assert!(points.iter().all(|p| p.welfare_ratio <= 1.0));
    }

    #[test]
    fn one_hub_per_agent_is_bounded_by_one_hub() {
        let cfg = small();
        let market = generate_market(&cfg.cluster, 2);
        let one = build_hubs(&market.agents, 1, HubScheme::Domain).unwrap();
        let all_tasks = vec![0; market.task_domains.len()];
        let whole = solve_partition(&market, &one, &all_tasks).unwrap();
        let n = market.agents.len();
        let each = build_hubs(&market.agents, n, HubScheme::FullMix).unwrap();
        let task_hubs: Vec<usize> = (0..market.task_domains.len()).map(|t| t % n).collect();
        let split = solve_partition(&market, &each, &task_hubs).unwrap();
        assert!(split.welfare <= whole.welfare);
    }

    #[test]
    fn ideal_beats_one_sided_schemes() {
        let out = scheme_compare(&small(), 0).unwrap();
        assert_eq!(out.summary.get("ideal_above_one_sided"), Some("true"));
        assert_eq!(out.metrics_csv.lines().count(), 5);
    }
}
