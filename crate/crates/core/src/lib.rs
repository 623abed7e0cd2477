//! Incentive-aware routing of dialogue requests across heterogeneous
//! model-serving agents.
//!
//! The crate is layered bottom-up:
//!
//! * [`mechanism`]: exact welfare-maximizing b-matching plus VCG payments.
//! * [`ledger`]: per-agent prompt prefix ledger and cache-affinity scores.
//! * [`predictor`]: per-agent online QoS models, cost accounting, valuations.
//! * [`router`]: micro-batching proxy hubs running the routing pipeline.
//! * [`simnet`]: seeded discrete-event simulation of agents and clients.
//! * [`experiments`]: end-to-end experiment drivers used by the CLI.

pub mod config;
pub mod experiments;
pub mod ledger;
pub mod mechanism;
pub mod predictor;
pub mod router;
pub mod simnet;
