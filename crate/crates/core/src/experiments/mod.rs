//! End-to-end experiment drivers. Each returns its metrics table, a
//! summary and any extra tables; [`write_outputs`] lays them out on disk.

mod cluster;
mod efficiency;
mod predictor_eval;
mod truthfulness;

use std::fmt::{self, Display};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

pub use cluster::{
    cluster_sweep, generate_market, scheme_compare, solve_partition, ClusterMarket, PartitionResult, SweepPoint,
};
pub use efficiency::{efficiency, simulate_policy, PolicyStats};
pub use predictor_eval::{predictor_eval, stationary_stream, window_nmae, StationaryResult, StreamStep};
pub use truthfulness::{truthfulness, TruthfulnessResult};

use crate::config::{Config, ConfigError};
use crate::mechanism::MechanismError;
use crate::router::RouterError;
use crate::simnet::SimError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Router(#[from] RouterError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    Efficiency,
    Truthfulness,
    ClusterSweep,
    SchemeCompare,
    PredictorEval,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Efficiency,
        ExperimentKind::Truthfulness,
        ExperimentKind::ClusterSweep,
        ExperimentKind::SchemeCompare,
        ExperimentKind::PredictorEval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Efficiency => "efficiency",
            ExperimentKind::Truthfulness => "truthfulness",
            ExperimentKind::ClusterSweep => "cluster_sweep",
            ExperimentKind::SchemeCompare => "scheme_compare",
            ExperimentKind::PredictorEval => "predictor_eval",
        }
    }
}

impl Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// Ordered `key = value` record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Deterministic for a fixed seed and config.
    pub metrics_csv: String,
    pub summary: Summary,
    /// Additional named files, e.g. tables with wall-clock timings.
    pub extra_files: Vec<(String, String)>,
}

pub fn run_experiment(kind: ExperimentKind, cfg: &Config, seed: u64) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    match kind {
        ExperimentKind::Efficiency => efficiency(cfg, seed),
        ExperimentKind::Truthfulness => truthfulness(cfg, seed).map(|r| r.output),
        ExperimentKind::ClusterSweep => cluster_sweep(cfg, seed),
        ExperimentKind::SchemeCompare => scheme_compare(cfg, seed),
        ExperimentKind::PredictorEval => predictor_eval(cfg, seed),
    }
}

pub fn manifest(output: &ExperimentOutput, cfg: &Config) -> String {
    format!(
        "experiment = {}\nseed = {}\nconfig_sha256 = {}\nhubroute_version = {}\n",
        output.kind,
        output.seed,
        cfg.hash(),
        env!("CARGO_PKG_VERSION"),
    )
}

/// Writes `metrics.csv`, `summary.txt`, `manifest.txt`, the extra files and
/// the effective config into `dir`.
pub fn write_outputs(dir: &Path, output: &ExperimentOutput, cfg: &Config) -> Result<(), ExperimentError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ExperimentError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut files = vec![
        ("metrics.csv".to_string(), output.metrics_csv.clone()),
        ("summary.txt".to_string(), output.summary.render()),
        ("manifest.txt".to_string(), manifest(output, cfg)),
        ("config.toml".to_string(), cfg.to_toml_string()),
    ];
    files.extend(output.extra_files.iter().cloned());
    for (name, content) in files {
        let path = dir.join(name);
        fs::write(&path, content).map_err(io(&path))?;
    }
    Ok(())
}
