use std::sync::Arc;
use std::time::Instant;

use super::{ExperimentError, ExperimentKind, ExperimentOutput, Summary};
use crate::config::Config;
use crate::predictor::warmup;
use crate::router::{build_hubs, write_metrics_csv, MetricsRow, Policy, Router, VirtualClock};
use crate::simnet::{generate_workload, generate_workload_from, run_simulation, RngStreams, SimAgent};

/// Aggregates of one policy's run.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyStats {
    pub policy: Policy,
    pub requests: usize,
    pub hit_rate: f64,
    pub mean_cost: f64,
    pub median_ttft_ms: f64,
    /// `sum(v - c_obs)` over rows that were not fallbacks.
    pub welfare: f64,
    pub fallbacks: usize,
}

impl PolicyStats {
    pub fn from_rows(policy: Policy, rows: &[MetricsRow]) -> PolicyStats {
        let n = rows.len().max(1) as f64;
        PolicyStats {
            policy,
            requests: rows.len(),
            hit_rate: rows.iter().map(MetricsRow::hit_rate).sum::<f64>() / n,
            mean_cost: rows.iter().map(|r| r.c_obs).sum::<f64>() / n,
            median_ttft_ms: median(rows.iter().map(|r| r.l_obs).collect()),
            welfare: rows.iter().filter(|r| !r.fallback).map(|r| r.v - r.c_obs).sum(),
            fallbacks: rows.iter().filter(|r| r.fallback).count(),
        }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    match xs.len() {
        0 => 0.0,
        len if len % 2 == 1 => xs[len / 2],
        len => (xs[len / 2 - 1] + xs[len / 2]) / 2.0,
    }
}

/// One full simulated run of `policy`: warm-up on every hub, then the
/// seeded workload through the router.
pub fn simulate_policy(cfg: &Config, seed: u64, policy: Policy) -> Result<Vec<MetricsRow>, ExperimentError> {
    let streams = RngStreams::new(seed);
    let profiles = cfg.agent_profiles();
    let hubs = build_hubs(&profiles, cfg.hubs.count, cfg.hubs.scheme)?;
    let mut router_cfg = cfg.router.clone();
    router_cfg.policy = policy;
    router_cfg.seed = seed;
    router_cfg.run_id = format!("efficiency-{policy}");
    router_cfg.domains = cfg.domain_tags();

    let clock = Arc::new(VirtualClock::new());
    let mut router = Router::new(router_cfg, &profiles, hubs.clone(), clock.clone())?;
    let mut agents: Vec<SimAgent> = cfg.agents.iter().cloned().map(SimAgent::new).collect();

    let sample = generate_workload_from(&mut streams.stream(RngStreams::WARMUP), &cfg.workload);
    for hub in router.hubs_mut() {
        let mut members: Vec<&mut SimAgent> =
            agents.iter_mut().filter(|a| hubs.hub_of_agent(a.id()) == Some(hub.id)).collect();
        warmup(&mut hub.pool, &mut hub.ledger, &mut members, &sample, &cfg.warmup, &streams)?;
    }

    let workload = generate_workload(seed, &cfg.workload);
    let outcome = run_simulation(&mut router, &clock, &mut agents, &workload, &cfg.engine, &streams)?;
    Ok(outcome.rows)
}

pub fn efficiency(cfg: &Config, seed: u64) -> Result<ExperimentOutput, ExperimentError> {
    let mut rows = Vec::new();
    let mut stats = Vec::new();
    let mut timing = String::new();
    for policy in Policy::ALL {
        let started = Instant::now();
        let policy_rows = simulate_policy(cfg, seed, policy)?;
        timing.push_str(&format!("{policy}.wall_ms = {:.3}\n", started.elapsed().as_secs_f64() * 1e3));
        stats.push(PolicyStats::from_rows(policy, &policy_rows));
        rows.extend(policy_rows);
    }

    let mut summary = Summary::default();
    summary.push("experiment", ExperimentKind::Efficiency);
    summary.push("seed", seed);
    for s in &stats {
        let p = s.policy;
        summary.push(format!("{p}.requests"), s.requests);
        summary.push(format!("{p}.hit_rate"), format!("{:.6}", s.hit_rate));
        summary.push(format!("{p}.mean_cost"), format!("{:.6}", s.mean_cost));
        summary.push(format!("{p}.median_ttft_ms"), format!("{:.6}", s.median_ttft_ms));
        summary.push(format!("{p}.welfare"), format!("{:.6}", s.welfare));
        summary.push(format!("{p}.fallbacks"), s.fallbacks);
    }
    let by = |p: Policy| stats.iter().find(|s| s.policy == p).expect("every policy ran");
    let (auction, random) = (by(Policy::Auction), by(Policy::Random));
    let ratio = if random.mean_cost > 0.0 { auction.mean_cost / random.mean_cost } else { f64::NAN };
    summary.push("auction_over_random_cost", format!("{ratio:.6}"));

    Ok(ExperimentOutput {
        kind: ExperimentKind::Efficiency,
        seed,
        metrics_csv: write_metrics_csv(&rows),
        summary,
        extra_files: vec![("timing.txt".into(), timing)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::WorkloadConfig;

    fn small() -> Config {
        Config {
            workload: WorkloadConfig { dialogues: 6, turns: 4, context_words: 60, ..WorkloadConfig::default() },
            ..Config::default()
        }
    }

    #[test]
    fn every_turn_yields_one_row_per_policy() {
        let cfg = small();
        for policy in Policy::ALL {
            let rows = simulate_policy(&cfg, 1, policy).unwrap();
            assert_eq!(rows.len(), 6 * 4, "{policy}");
            assert!(rows.iter().all(|r| r.policy == policy));
        }
    }

    #[test]
    fn summary_welfare_is_recomputable_from_csv() {
        let out = efficiency(&small(), 2).unwrap();
        let rows = crate::router::read_metrics_csv(&out.metrics_csv).unwrap();
        let auction: Vec<_> = rows.iter().filter(|r| r.policy == Policy::Auction).cloned().collect();
        let recomputed = PolicyStats::from_rows(Policy::Auction, &auction).welfare;
        let reported = out.summary.get_f64("auction.welfare").unwrap();
        assert!((recomputed - reported).abs() < 1e-5, "{recomputed} vs {reported}");
    }

    #[test]
    fn median_of_even_count_averages() {
        assert_eq!(median(vec![1.0, 4.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(Vec::new()), 0.0);
    }
}
