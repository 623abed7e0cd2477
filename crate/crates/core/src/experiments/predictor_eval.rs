use rand::Rng;

use super::{simulate_policy, ExperimentError, ExperimentKind, ExperimentOutput, Summary};
use crate::config::{Config, PredictorEvalConfig};
use crate::predictor::{
    featurize, nmae, AgentLoad, DomainSet, LoadSnapshot, Observation, PredictorConfig, PredictorPool, RequestFeatures,
    TokenUsage,
};
use crate::router::{MetricsRow, Policy};
use crate::simnet::RngStreams;

/// Prequential record of one update: the prediction made just before the
/// observation arrived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamStep {
    pub latency_pred: f64,
    pub latency_obs: f64,
    pub cost_pred: f64,
    pub cost_obs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    pub steps: Vec<StreamStep>,
    /// First update (1-based) after which the trailing-window NMAE is at
    /// or below the target, if ever.
    pub latency_converged_at: Option<usize>,
    pub cost_converged_at: Option<usize>,
}

/// NMAE over the `window` steps ending at `end` (exclusive).
pub fn window_nmae(pairs: &[(f64, f64)], end: usize, window: usize) -> f64 {
    nmae(&pairs[end.saturating_sub(window)..end])
}

fn first_converged(pairs: &[(f64, f64)], window: usize, target: f64) -> Option<usize> {
    (window..=pairs.len()).find(|&end| window_nmae(pairs, end, window) <= target)
}

/// Feeds one agent's predictor a stream of noisy observations around fixed
/// latency and cost targets, always at the same feature point.
pub fn stationary_stream(predictor: &PredictorConfig, cfg: &PredictorEvalConfig, seed: u64) -> StationaryResult {
    let mut rng = RngStreams::new(seed).stream("stationary");
    let domains = DomainSet::new(["qa"]);
    let mut pool = PredictorPool::new(predictor.clone(), domains.clone());
    pool.register("probe", None);
    let x = featurize(
        RequestFeatures { prompt_chars: 800, turn: 2, domain: "qa" },
        AgentLoad { inflight: 1, rate: 2.0, capacity: 4 },
        0.5,
        LoadSnapshot { router_inflight: 2, router_rate: 4.0 },
        &domains,
    );
    let mut noisy = |target: f64| target * (1.0 + cfg.noise * rng.gen_range(-1.0..=1.0));
    let steps: Vec<StreamStep> = (0..cfg.updates)
        .map(|_| {
            let pred = pool.predict("probe", &x).expect("probe is registered");
            let obs = Observation {
                latency_ms: noisy(cfg.latency_target_ms),
                usage: TokenUsage { prompt: 200, hit: 100, generated: 40 },
                cost: noisy(cfg.cost_target),
                correct: true,
            };
            pool.update("probe", &x, &obs).expect("probe is registered");
            StreamStep {
                latency_pred: pred.latency_ms,
                latency_obs: obs.latency_ms,
                cost_pred: pred.cost,
                cost_obs: obs.cost,
            }
        })
        .collect();
    let latency: Vec<(f64, f64)> = steps.iter().map(|s| (s.latency_pred, s.latency_obs)).collect();
    let cost: Vec<(f64, f64)> = steps.iter().map(|s| (s.cost_pred, s.cost_obs)).collect();
    StationaryResult {
        latency_converged_at: first_converged(&latency, cfg.window, cfg.nmae_target),
        cost_converged_at: first_converged(&cost, cfg.window, cfg.nmae_target),
        steps,
    }
}

/// `(first quartile, last quartile)` NMAE of a prediction/outcome sequence.
fn quartiles(pairs: &[(f64, f64)]) -> (f64, f64) {
    let q = (pairs.len() / 4).max(1).min(pairs.len());
    (nmae(&pairs[..q]), nmae(&pairs[pairs.len() - q..]))
}

pub fn predictor_eval(cfg: &Config, seed: u64) -> Result<ExperimentOutput, ExperimentError> {
    let e = &cfg.predictor_eval;
    let stationary = stationary_stream(&cfg.router.predictor, e, seed);

    // The drifting case starts from untrained models.
    let mut cold = cfg.clone();
    cold.warmup.dialogues_per_agent = 0;
    cold.workload.dialogues = e.drift_dialogues;
    let rows = simulate_policy(&cold, seed, Policy::Auction)?;
    let pairs = |f: fn(&MetricsRow) -> (f64, f64)| rows.iter().map(f).collect::<Vec<_>>();
    let (lat_first, lat_last) = quartiles(&pairs(|r| (r.l_hat, r.l_obs)));
    let (cost_first, cost_last) = quartiles(&pairs(|r| (r.c_hat, r.c_obs)));

    let latency: Vec<(f64, f64)> = stationary.steps.iter().map(|s| (s.latency_pred, s.latency_obs)).collect();
    let cost: Vec<(f64, f64)> = stationary.steps.iter().map(|s| (s.cost_pred, s.cost_obs)).collect();
    let mut csv =
        String::from("update,latency_pred,latency_obs,cost_pred,cost_obs,latency_window_nmae,cost_window_nmae\n");
    for (i, s) in stationary.steps.iter().enumerate() {
        let end = i + 1;
        csv.push_str(&format!(
            "{end},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            s.latency_pred,
            s.latency_obs,
            s.cost_pred,
            s.cost_obs,
            window_nmae(&latency, end, e.window),
            window_nmae(&cost, end, e.window),
        ));
    }

    let at = |x: Option<usize>| x.map_or_else(|| "never".to_string(), |n| n.to_string());
    let mut summary = Summary::default();
    summary.push("experiment", ExperimentKind::PredictorEval);
    summary.push("seed", seed);
    summary.push("stationary.updates", e.updates);
    summary.push("stationary.window", e.window);
    summary.push("stationary.latency_converged_at", at(stationary.latency_converged_at));
    summary.push("stationary.cost_converged_at", at(stationary.cost_converged_at));
    summary.push("stationary.latency_final_nmae", format!("{:.6}", window_nmae(&latency, latency.len(), e.window)));
    summary.push("stationary.cost_final_nmae", format!("{:.6}", window_nmae(&cost, cost.len(), e.window)));
    summary.push("drift.updates", rows.len());
    summary.push("drift.latency_nmae_first_quartile", format!("{lat_first:.6}"));
    summary.push("drift.latency_nmae_last_quartile", format!("{lat_last:.6}"));
    summary.push("drift.cost_nmae_first_quartile", format!("{cost_first:.6}"));
    summary.push("drift.cost_nmae_last_quartile", format!("{cost_last:.6}"));

    Ok(ExperimentOutput {
        kind: ExperimentKind::PredictorEval,
        seed,
        metrics_csv: csv,
        summary,
        extra_files: vec![("drift_metrics.csv".into(), crate::router::write_metrics_csv(&rows))],
    })
}
