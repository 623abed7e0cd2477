//! The proxy hub layer: request intake, micro-batching, routing policies,
//! slot accounting and completion feedback.

mod agent;
mod batcher;
mod clock;
mod clustering;
mod envelope;
mod hub;
mod metrics;
mod rate;
mod request;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agent::{AgentProfile, AgentState};
pub use batcher::{BatchReason, BatcherConfig, MicroBatch, MicroBatcher};
pub use clock::{Clock, VirtualClock, WallClock};
pub use clustering::{build_hubs, classify_request, HubConfig, HubScheme};
pub use envelope::{
    serialize_prompt, ChatMessage, EnvelopeBody, RequestEnvelope, HEADER_DIALOGUE_ID, HEADER_RUN_ID, HEADER_SOURCE,
    HEADER_TURN_NUMBER,
};
pub use hub::{Hub, RouteDecision};
pub use metrics::{read_metrics_csv, write_metrics_csv, MetricsRow, METRICS_COLUMNS};
pub use rate::{RateWindow, DEFAULT_RATE_WINDOW_MS};
pub use request::{Outcome, PendingRequest, ResponseSlot};

use crate::ledger::{PrefixLedger, DEFAULT_CAPACITY, DEFAULT_EVICT_THRESHOLD};
use crate::predictor::{
    valuation, DomainSet, FeatureVector, Observation, PredictorConfig, PredictorPool, QosEstimate, ValuationConfig,
};
use crate::simnet::RngStreams;
use hub::RouteContext;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouterError {
    #[error("queue of hub {hub} is full")]
    QueueFull { hub: usize },
    #[error("request `{request}` is invalid: {reason}")]
    InvalidRequest { request: String, reason: String },
    #[error("dialogue `{dialogue}` already has a turn in flight")]
    TurnInFlight { dialogue: String },
    #[error("request id `{request}` is already in use")]
    DuplicateRequest { request: String },
    #[error("no outstanding request `{request}`")]
    UnknownRequest { request: String },
    #[error("hub configuration: {reason}")]
    HubConfig { reason: String },
    #[error("matching failed: {0}")]
    Mechanism(String),
    #[error("predictor update failed: {0}")]
    Predictor(String),
    #[error("request aborted: {0}")]
    Aborted(String),
    #[error("router is no longer accepting submissions")]
    Closed,
}

impl RouterError {
    pub(crate) fn mechanism(e: crate::mechanism::MechanismError) -> Self {
        RouterError::Mechanism(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Auction,
    Random,
    RoundRobin,
    GreedyAffinity,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Auction, Policy::Random, Policy::RoundRobin, Policy::GreedyAffinity];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Auction => "auction",
            Policy::Random => "random",
            Policy::RoundRobin => "round_robin",
            Policy::GreedyAffinity => "greedy_affinity",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouterConfig {
    pub policy: Policy,
    pub batcher: BatcherConfig,
    /// Failed auction rounds before a request falls back to the least-loaded agent.
    pub max_retries: u32,
    pub rate_window_ms: f64,
    pub valuation: ValuationConfig,
    pub predictor: PredictorConfig,
    pub ledger_capacity: usize,
    pub evict_threshold: f64,
    /// Domain tags given their own one-hot slot.
    pub domains: Vec<String>,
    /// Set by the experiment driver from the run seed.
    #[serde(skip)]
    pub seed: u64,
    #[serde(skip)]
    pub run_id: String,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            policy: Policy::Auction,
            batcher: BatcherConfig::default(),
            max_retries: 3,
            rate_window_ms: DEFAULT_RATE_WINDOW_MS,
            valuation: ValuationConfig::default(),
            predictor: PredictorConfig::default(),
            ledger_capacity: DEFAULT_CAPACITY,
            evict_threshold: DEFAULT_EVICT_THRESHOLD,
            domains: Vec::new(),
            seed: 0,
            run_id: "run".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Outstanding {
    request: PendingRequest,
    decision: RouteDecision,
    features: FeatureVector,
    dispatched: bool,
}

/// Cloneable handle for submitting from other threads; requests are picked
/// up on the router's next [`Router::tick`].
#[derive(Debug, Clone)]
pub struct Submitter {
    tx: Sender<PendingRequest>,
}

impl Submitter {
    pub fn submit(&self, request: PendingRequest) -> Result<(), RouterError> {
        self.tx.send(request).map_err(|_| RouterError::Closed)
    }
}

/// All hubs plus the bookkeeping that links decisions to completions.
pub struct Router {
    config: RouterConfig,
    hub_config: HubConfig,
    hubs: Vec<Hub>,
    clock: Arc<dyn Clock>,
    outstanding: BTreeMap<String, Outstanding>,
    active_dialogues: BTreeSet<String>,
    rows: Vec<MetricsRow>,
    next_batch_id: u64,
    inbox_tx: Sender<PendingRequest>,
    inbox_rx: Receiver<PendingRequest>,
}

impl Router {
    pub fn new(
        config: RouterConfig,
        agents: &[AgentProfile],
        hub_config: HubConfig,
        clock: Arc<dyn Clock>,
    ) -> Result<Router, RouterError> {
        hub_config.validate(agents)?;
        let mut ids = BTreeSet::new();
        if let Some(dup) = agents.iter().find(|a| !ids.insert(a.id.as_str())) {
            return Err(RouterError::HubConfig { reason: format!("agent id `{}` appears twice", dup.id) });
        }
        let streams = RngStreams::new(config.seed);
        let domains = DomainSet::new(config.domains.iter().cloned());
        let hubs = (0..hub_config.hubs)
            .map(|h| {
                let states: Vec<AgentState> = agents
                    .iter()
                    .filter(|a| hub_config.membership[&a.id] == h)
                    .map(|a| AgentState::new(a.clone(), h, config.rate_window_ms))
                    .collect();
                let mut pool = PredictorPool::new(config.predictor.clone(), domains.clone());
                for s in &states {
                    pool.register(s.id(), None);
                }
                let ledger = PrefixLedger::new(config.ledger_capacity, config.evict_threshold);
                let rng = streams.indexed(RngStreams::ROUTER, h);
                Hub::new(h, states, config.batcher, ledger, pool, rng, config.rate_window_ms)
            })
            .collect();
        let (inbox_tx, inbox_rx) = mpsc::channel();
        Ok(Router {
            config,
            hub_config,
            hubs,
            clock,
            outstanding: BTreeMap::new(),
            active_dialogues: BTreeSet::new(),
            rows: Vec::new(),
            next_batch_id: 0,
            inbox_tx,
            inbox_rx,
        })
    }

    pub fn config(&self) -> &RouterConfig {
        &self.config
    }

    pub fn hub_config(&self) -> &HubConfig {
        &self.hub_config
    }

    pub fn hubs(&self) -> &[Hub] {
        &self.hubs
    }

    pub fn hubs_mut(&mut self) -> &mut [Hub] {
        &mut self.hubs
    }

    pub fn now_ms(&self) -> f64 {
        self.clock.now_ms()
    }

    pub fn submitter(&self) -> Submitter {
        Submitter { tx: self.inbox_tx.clone() }
    }

    /// Enqueues `request` on its hub. On rejection the error is also
    /// delivered through the request's response slot.
    pub fn submit(&mut self, mut request: PendingRequest) -> Result<(), RouterError> {
        let result = self.try_enqueue(&mut request);
        if let Err(e) = &result {
            request.slot.fill(Outcome::Rejected(e.clone()));
        }
        result
    }

    fn try_enqueue(&mut self, request: &mut PendingRequest) -> Result<(), RouterError> {
        request.validate()?;
        if self.outstanding.contains_key(&request.request_id) {
            return Err(RouterError::DuplicateRequest { request: request.request_id.clone() });
        }
        if self.active_dialogues.contains(&request.dialogue_id) {
            return Err(RouterError::TurnInFlight { dialogue: request.dialogue_id.clone() });
        }
        if request.run_id.is_empty() {
            request.run_id = self.config.run_id.clone();
        }
        let now = self.clock.now_ms();
        request.arrival_ms = now;
        let hub = classify_request(&request.domain, &self.hub_config);
        self.hubs[hub].batcher.push(request.clone(), now, hub)?;
        self.active_dialogues.insert(request.dialogue_id.clone());
        Ok(())
    }

    fn drain_inbox(&mut self) {
        while let Ok(request) = self.inbox_rx.try_recv() {
            let _ = self.submit(request);
        }
    }

    /// Earliest time a queued request times out.
    pub fn next_deadline(&self) -> Option<f64> {
        self.hubs.iter().filter_map(|h| h.batcher.deadline()).min_by(f64::total_cmp)
    }

    pub fn queued(&self) -> usize {
        self.hubs.iter().map(Hub::queued).sum()
    }

    pub fn outstanding(&self) -> usize {
        self.outstanding.len()
    }

    /// Forms and routes every batch that is due, returning the new decisions.
    pub fn tick(&mut self) -> Result<Vec<RouteDecision>, RouterError> {
        self.drain_inbox();
        let now = self.clock.now_ms();
        let mut decisions = Vec::new();
        for h in 0..self.hubs.len() {
            while let Some(batch) = self.hubs[h].next_batch(now) {
                let ctx = RouteContext {
                    policy: self.config.policy,
                    valuation: &self.config.valuation,
                    max_retries: self.config.max_retries,
                    batch_id: self.next_batch_id,
                    now_ms: now,
                };
                self.next_batch_id += 1;
                let result = self.hubs[h].route_batch(batch, &ctx)?;
                for req in result.requeued {
                    self.hubs[h].batcher.requeue(req, now);
                }
                for (request, decision, features) in result.decided {
                    decisions.push(decision.clone());
                    let id = request.request_id.clone();
                    self.outstanding.insert(id, Outstanding { request, decision, features, dispatched: false });
                }
            }
        }
        Ok(decisions)
    }

    fn locate(&self, request_id: &str) -> Result<(usize, usize), RouterError> {
        let o = self
            .outstanding
            .get(request_id)
            .ok_or_else(|| RouterError::UnknownRequest { request: request_id.to_string() })?;
        let hub = o.decision.hub;
        let agent = self.hubs[hub].agent_index(&o.decision.agent_id).expect("decisions name hub agents");
        Ok((hub, agent))
    }

    /// Marks a decided request as sent to its agent.
    pub fn dispatch(&mut self, request_id: &str) -> Result<(), RouterError> {
        let (hub, agent) = self.locate(request_id)?;
        let now = self.clock.now_ms();
        let o = self.outstanding.get_mut(request_id).expect("located above");
        if !o.dispatched {
            o.dispatched = true;
            self.hubs[hub].agents[agent].dispatch(now);
            self.hubs[hub].rate.record(now);
        }
        Ok(())
    }

    fn finish(&mut self, request_id: &str) -> Result<Outstanding, RouterError> {
        let (hub, agent) = self.locate(request_id)?;
        let o = self.outstanding.remove(request_id).expect("located above");
        let state = &mut self.hubs[hub].agents[agent];
        if o.dispatched {
            state.release();
        } else {
            state.cancel_reservation();
        }
        self.hubs[hub].outstanding -= 1;
        self.active_dialogues.remove(&o.request.dialogue_id);
        Ok(o)
    }

    /// Feeds a served request's outcome back: frees its slot, trains the
    /// agent's predictor, updates the ledger and logs the metrics row.
    pub fn on_completion(
        &mut self,
        request_id: &str,
        obs: &Observation,
        t_first_token: f64,
    ) -> Result<MetricsRow, RouterError> {
        let now = self.clock.now_ms();
        let o = self.finish(request_id)?;
        let (req, d) = (&o.request, &o.decision);
        let hub = &mut self.hubs[d.hub];
        hub.pool.update(&d.agent_id, &o.features, obs).map_err(|e| RouterError::Predictor(e.to_string()))?;
        hub.ledger.record_prompt(&d.agent_id, &req.dialogue_id, &req.prompt, now);
        hub.ledger.evict_if_stale(&d.agent_id, &req.dialogue_id, d.affinity, obs.usage.hit);

        let realized =
            QosEstimate { latency_ms: obs.latency_ms, cost: obs.cost, quality: if obs.correct { 1.0 } else { 0.0 } };
        let row = MetricsRow {
            run_id: req.run_id.clone(),
            batch_id: d.batch_id,
            request_id: req.request_id.clone(),
            dialogue_id: req.dialogue_id.clone(),
            turn: req.turn,
            agent_id: d.agent_id.clone(),
            policy: d.policy,
            affinity: d.affinity,
            l_hat: d.estimate.latency_ms,
            c_hat: d.estimate.cost,
            q_hat: d.estimate.quality,
            v: d.v_true,
            v_realized: valuation(&realized, &self.config.valuation) * req.value_scale,
            w: d.welfare,
            payment: d.payment,
            l_obs: obs.latency_ms,
            c_obs: obs.cost,
            p_obs: obs.correct,
            prompt_tokens: obs.usage.prompt,
            cached_tokens: obs.usage.hit,
            fallback: d.fallback,
            t_submit: req.arrival_ms,
            t_decide: d.t_decide,
            t_first_token,
            t_done: now,
        };
        self.rows.push(row.clone());
        req.slot.fill(Outcome::Served(Box::new(row.clone())));
        Ok(row)
    }

    /// Gives up on a decided request, freeing its slot and rejecting it.
    pub fn abort(&mut self, request_id: &str, reason: &str) -> Result<(), RouterError> {
        let o = self.finish(request_id)?;
        o.request.slot.fill(Outcome::Rejected(RouterError::Aborted(reason.to_string())));
        Ok(())
    }

    pub fn rows(&self) -> &[MetricsRow] {
        &self.rows
    }

    pub fn take_rows(&mut self) -> Vec<MetricsRow> {
        std::mem::take(&mut self.rows)
    }
}

#[cfg(test)]
mod tests;
