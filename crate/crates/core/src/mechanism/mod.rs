//! Welfare-maximizing assignment of clients to capacity-limited agents and
//! Clarke-pivot (VCG) payments.
//!
//! Everything here is a pure function of its inputs. Currency enters as
//! `f64` and is fixed to micro-units ([`Money`]) before any arithmetic, so
//! identical problems always produce identical allocations and payments.

mod allocation;
pub mod flow;
mod money;
mod problem;
mod vcg;

use thiserror::Error;

pub use allocation::{
    brute_force_matching, solve_allocation, Allocation, Assignment, BRUTE_FORCE_MAX_AGENTS, BRUTE_FORCE_MAX_CLIENTS,
};
pub use flow::{build_flow_network, min_cost_max_weight_flow, FlowArc, FlowNetwork};
pub use money::{Money, MICROS_PER_UNIT};
pub use problem::{AgentSlots, MatchProblem, WelfareEdge};
pub use vcg::{
    vcg_payments, vcg_payments_with, verify_budget_balance, ClientPayment, CounterfactualMode, PaymentSchedule,
};

#[derive(Debug, Error, PartialEq)]
pub enum MechanismError {
    #[error("client index {index} out of range")]
    UnknownClient { index: usize },
    #[error("agent index {index} out of range")]
    UnknownAgent { index: usize },
    #[error("duplicate edge between client `{client}` and agent `{agent}`")]
    DuplicateEdge { client: String, agent: String },
    #[error("edge between client `{client}` and agent `{agent}` has negative welfare")]
    NegativeWelfare { client: String, agent: String },
    #[error("currency amount {value} is not representable")]
    NonFiniteCurrency { value: f64 },
    #[error("agent `{agent}` capacity {capacity} exceeds the arc capacity range")]
    CapacityOverflow { agent: String, capacity: u64 },
    #[error("agent `{agent}` has negative capacity")]
    NegativeCapacity { agent: String },
    #[error("arc {index} has negative capacity {capacity}")]
    MalformedArc { index: usize, capacity: i64 },
    #[error("instance with {clients} clients and {agents} agents is too large for exhaustive search")]
    InstanceTooLarge { clients: usize, agents: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Solves the round and prices it in one call.
pub fn run_auction(problem: &MatchProblem) -> Result<(Allocation, PaymentSchedule), MechanismError> {
    let alloc = solve_allocation(problem)?;
    let payments = vcg_payments(problem, &alloc)?;
    Ok((alloc, payments))
}
