//! Seeded simulation substrate: simulated agents with KV caches, synthetic
//! multi-turn workloads, bidding strategies, cluster schemes and the
//! discrete-event loop that drives them through the router.

mod agent;
mod engine;
mod evaluator;
mod rng;
mod scheme;
mod strategy;
mod workload;

use thiserror::Error;

pub use agent::{ExecRngs, Execution, SimAgent, SimAgentConfig, SimTask};
pub use engine::{run_simulation, EngineConfig, SimOutcome};
pub use evaluator::{evaluate_answer, normalize_tokens};
pub use rng::{RngStreams, SimRng};
pub use scheme::{build_scheme, ClusterScheme, SchemeAssignment};
pub use strategy::{apply_strategy, StrategyKind, StrategyProfile};
pub use workload::{
    dump_workload, generate_workload, generate_workload_from, load_workload, DialogueTurn, DomainWeight,
    SyntheticDialogue, WorkloadConfig,
};

use crate::router::RouterError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("agent `{agent}` has no free slot")]
    NoFreeSlot { agent: String },
    #[error("router named unknown agent `{agent}`")]
    UnknownAgent { agent: String },
    #[error("workload line {line}: {message}")]
    Workload { line: usize, message: String },
    #[error(transparent)]
    Router(#[from] RouterError),
}
