use rand::Rng;

use super::{AgentState, BatcherConfig, MicroBatch, MicroBatcher, PendingRequest, Policy, RateWindow, RouterError};
use crate::ledger::{AffinityScore, PrefixLedger};
use crate::mechanism::{run_auction, AgentSlots, MatchProblem};
use crate::predictor::{
    featurize, valuation, FeatureVector, LoadSnapshot, PredictorPool, QosEstimate, RequestFeatures, ValuationConfig,
};
use crate::simnet::SimRng;

/// Outcome of routing one (request, agent) pair at decision time.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteDecision {
    pub request_id: String,
    pub hub: usize,
    pub agent_id: String,
    pub batch_id: u64,
    pub policy: Policy,
    pub affinity: f64,
    pub estimate: QosEstimate,
    pub v_true: f64,
    pub v_reported: f64,
    pub cost: f64,
    /// Reported value minus predicted cost.
    pub welfare: f64,
    pub payment: f64,
    pub fallback: bool,
    pub t_decide: f64,
}

#[derive(Debug, Clone)]
struct Candidate {
    agent: usize,
    affinity: AffinityScore,
    features: FeatureVector,
    estimate: QosEstimate,
    v_true: f64,
    v_reported: f64,
}

pub(crate) struct RouteContext<'a> {
    pub policy: Policy,
    pub valuation: &'a ValuationConfig,
    pub max_retries: u32,
    pub batch_id: u64,
    pub now_ms: f64,
}

#[derive(Debug, Default)]
pub(crate) struct BatchResult {
    pub decided: Vec<(PendingRequest, RouteDecision, FeatureVector)>,
    pub requeued: Vec<PendingRequest>,
}

/// One proxy hub: its agents, queue, ledger and predictors.
#[derive(Debug, Clone)]
pub struct Hub {
    pub id: usize,
    pub(crate) agents: Vec<AgentState>,
    pub(crate) batcher: MicroBatcher,
    pub ledger: PrefixLedger,
    pub pool: PredictorPool,
    rr_cursor: usize,
    rng: SimRng,
    /// Decided requests not yet completed.
    pub(crate) outstanding: u32,
    pub(crate) rate: RateWindow,
}

impl Hub {
    pub(crate) fn new(
        id: usize,
        agents: Vec<AgentState>,
        batcher: BatcherConfig,
        ledger: PrefixLedger,
        pool: PredictorPool,
        rng: SimRng,
        rate_window_ms: f64,
    ) -> Self {
        Hub {
            id,
            agents,
            batcher: MicroBatcher::new(batcher),
            ledger,
            pool,
            rr_cursor: 0,
            rng,
            outstanding: 0,
            rate: RateWindow::new(rate_window_ms),
        }
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn queued(&self) -> usize {
        self.batcher.len()
    }

    pub fn free_slots(&self) -> u32 {
        self.agents.iter().map(AgentState::free_slots).sum()
    }

    pub(crate) fn agent_index(&self, id: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.id() == id)
    }

    pub(crate) fn next_batch(&mut self, now_ms: f64) -> Option<MicroBatch> {
        if self.free_slots() == 0 {
            return None;
        }
        self.batcher.next_batch(now_ms)
    }

    fn load(&self, now_ms: f64) -> LoadSnapshot {
        LoadSnapshot { router_inflight: self.outstanding, router_rate: self.rate.rate_per_sec(now_ms) }
    }

    fn candidate(&self, req: &PendingRequest, agent: usize, load: LoadSnapshot, ctx: &RouteContext<'_>) -> Candidate {
        let state = &self.agents[agent];
        let affinity = self.ledger.compute_affinity(state.id(), &req.dialogue_id, &req.prompt);
        let request = RequestFeatures { prompt_chars: req.prompt.chars().count(), turn: req.turn, domain: &req.domain };
        let features = featurize(request, state.load(ctx.now_ms), affinity.ratio, load, self.pool.domains());
        let estimate = self.pool.predict(state.id(), &features).expect("every hub agent is registered").clamped();
        let v_true = valuation(&estimate, ctx.valuation) * req.value_scale;
        Candidate { agent, affinity, features, estimate, v_true, v_reported: v_true * req.report_factor }
    }

    fn decide(
        &mut self,
        req: PendingRequest,
        c: Candidate,
        payment: f64,
        welfare: f64,
        fallback: bool,
        ctx: &RouteContext<'_>,
    ) -> (PendingRequest, RouteDecision, FeatureVector) {
        let reserved = self.agents[c.agent].reserve();
        debug_assert!(reserved, "decisions only target agents with free slots");
        self.outstanding += 1;
        let decision = RouteDecision {
            request_id: req.request_id.clone(),
            hub: self.id,
            agent_id: self.agents[c.agent].id().to_string(),
            batch_id: ctx.batch_id,
            policy: ctx.policy,
            affinity: c.affinity.ratio,
            estimate: c.estimate,
            v_true: c.v_true,
            v_reported: c.v_reported,
            cost: c.estimate.cost,
            welfare,
            payment,
            fallback,
            t_decide: ctx.now_ms,
        };
        (req, decision, c.features)
    }

    /// Routes one micro-batch under `ctx.policy`, reserving a slot for every
    /// decided request.
    pub(crate) fn route_batch(
        &mut self,
        batch: MicroBatch,
        ctx: &RouteContext<'_>,
    ) -> Result<BatchResult, RouterError> {
        let load = self.load(ctx.now_ms);
        let open: Vec<usize> = (0..self.agents.len()).filter(|&i| self.agents[i].free_slots() > 0).collect();
        let candidates: Vec<Vec<Candidate>> =
            batch.requests.iter().map(|r| open.iter().map(|&i| self.candidate(r, i, load, ctx)).collect()).collect();
        match ctx.policy {
            Policy::Auction => self.route_auction(batch.requests, candidates, ctx),
            _ => Ok(self.route_baseline(batch.requests, candidates, ctx)),
        }
    }

    fn route_auction(
        &mut self,
        requests: Vec<PendingRequest>,
        candidates: Vec<Vec<Candidate>>,
        ctx: &RouteContext<'_>,
    ) -> Result<BatchResult, RouterError> {
        let capacity_existed = self.free_slots() > 0;
        let clients = requests.iter().map(|r| r.request_id.clone()).collect();
        let slots =
            self.agents.iter().map(|a| AgentSlots { id: a.id().to_string(), capacity: a.free_slots() }).collect();
        let mut problem = MatchProblem::new(clients, slots);
        for (j, cands) in candidates.iter().enumerate() {
            for c in cands {
                problem.add_edge(j, c.agent, c.v_reported, c.estimate.cost).map_err(RouterError::mechanism)?;
            }
        }
        let (alloc, payments) = run_auction(&problem).map_err(RouterError::mechanism)?;

        let mut result = BatchResult::default();
        let mut losers = Vec::new();
        for (j, (req, cands)) in requests.into_iter().zip(candidates).enumerate() {
            match alloc.assignment_of(j) {
                Some(m) => {
                    let c = cands.into_iter().find(|c| c.agent == m.agent).expect("matched edges come from candidates");
                    let payment = payments.payment_of(j).to_currency();
                    result.decided.push(self.decide(req, c, payment, m.welfare.to_currency(), false, ctx));
                }
                None => losers.push((req, cands)),
            }
        }
        for (mut req, cands) in losers {
            if capacity_existed {
                req.retries += 1;
            }
            if req.retries <= ctx.max_retries {
                result.requeued.push(req);
                continue;
            }
            match self.least_loaded().and_then(|i| cands.into_iter().find(|c| c.agent == i)) {
                Some(c) => {
                    let (payment, welfare) = (c.estimate.cost, c.v_reported - c.estimate.cost);
                    result.decided.push(self.decide(req, c, payment, welfare, true, ctx));
                }
                None => result.requeued.push(req),
            }
        }
        Ok(result)
    }

    /// Agent with free slots and the lowest utilization, lowest index on ties.
    fn least_loaded(&self) -> Option<usize> {
        (0..self.agents.len()).filter(|&i| self.agents[i].free_slots() > 0).min_by(|&a, &b| {
            let util = |i: usize| {
                let s = &self.agents[i];
                f64::from(s.inflight() + s.reserved()) / f64::from(s.profile.capacity.max(1))
            };
            util(a).total_cmp(&util(b)).then(a.cmp(&b))
        })
    }

    fn route_baseline(
        &mut self,
        requests: Vec<PendingRequest>,
        candidates: Vec<Vec<Candidate>>,
        ctx: &RouteContext<'_>,
    ) -> BatchResult {
        let mut result = BatchResult::default();
        for (req, cands) in requests.into_iter().zip(candidates) {
            let live: Vec<&Candidate> = cands.iter().filter(|c| self.agents[c.agent].free_slots() > 0).collect();
            if live.is_empty() {
                result.requeued.push(req);
                continue;
            }
            let pick = match ctx.policy {
                Policy::Random => live[self.rng.gen_range(0..live.len())].agent,
                Policy::RoundRobin => {
                    let n = self.agents.len();
                    let start = self.rr_cursor;
                    let i = (0..n)
                        .map(|k| (start + k) % n)
                        .find(|&i| live.iter().any(|c| c.agent == i))
                        .expect("at least one live agent");
                    self.rr_cursor = (i + 1) % n;
                    i
                }
                Policy::GreedyAffinity => {
                    live.iter()
                        .max_by(|a, b| a.affinity.ratio.total_cmp(&b.affinity.ratio).then(b.agent.cmp(&a.agent)))
                        .expect("at least one live agent")
                        .agent
                }
                Policy::Auction => unreachable!("auction batches are routed by route_auction"),
            };
            let c = cands.into_iter().find(|c| c.agent == pick).expect("pick comes from candidates");
            let (payment, welfare) = (c.estimate.cost, c.v_reported - c.estimate.cost);
            result.decided.push(self.decide(req, c, payment, welfare, false, ctx));
        }
        result
    }
}
