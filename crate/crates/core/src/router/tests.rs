use super::*;
use crate::predictor::{PricingProfile, TokenUsage};

fn profile(id: &str, domain: &str, capacity: u32) -> AgentProfile {
    AgentProfile {
        id: id.into(),
        scale: 1.0,
        domain: domain.into(),
        capacity,
        prices: PricingProfile { miss: 0.01, hit: 0.001, out: 0.02 },
    }
}

/// Cold priors give v = 100 * (0.25 - 0.2) = 5 per unit of value scale and cost 1.
fn config(policy: Policy) -> RouterConfig {
    RouterConfig {
        policy,
        valuation: ValuationConfig { delta: 0.5, latency_ref_ms: 1000.0, value_scale: 100.0 },
        predictor: PredictorConfig {
            priors: QosEstimate { latency_ms: 400.0, cost: 1.0, quality: 0.5 },
            ..PredictorConfig::default()
        },
        ..RouterConfig::default()
    }
}

fn router(cfg: RouterConfig, agents: &[AgentProfile]) -> (Router, VirtualClock) {
    let clock = VirtualClock::new();
    let r = Router::new(cfg, agents, HubConfig::single(agents), Arc::new(clock.clone())).unwrap();
    (r, clock)
}

fn req(id: &str, dialogue: &str, scale: f64) -> PendingRequest {
    let mut r = PendingRequest::new(id, dialogue, 1, "qa", format!("system: context of {dialogue}\nuser: q\n"));
    r.value_scale = scale;
    r
}

fn obs(hit: u64) -> Observation {
    Observation { latency_ms: 100.0, usage: TokenUsage { prompt: 10, hit, generated: 5 }, cost: 0.2, correct: true }
}

#[test]
fn sixteen_rapid_submits_form_one_size_batch() {
    let (mut r, _) = router(config(Policy::Auction), &[profile("a0", "qa", 32)]);
    for i in 0..16 {
        r.submit(req(&format!("r{i}"), &format!("d{i}"), 1.0)).unwrap();
    }
    let decisions = r.tick().unwrap();
    assert_eq!(decisions.len(), 16);
    assert!(decisions.iter().all(|d| d.batch_id == 0));
}

#[test]
fn timeout_batch_waits_for_max_wait() {
    let (mut r, clock) = router(config(Policy::Auction), &[profile("a0", "qa", 4)]);
    r.submit(req("r0", "d0", 1.0)).unwrap();
    assert!(r.tick().unwrap().is_empty());
    assert_eq!(r.next_deadline(), Some(10.0));
    clock.advance_to(10.0);
    assert_eq!(r.tick().unwrap().len(), 1);
}

#[test]
fn queue_bound_rejects_second_submit() {
    let mut cfg = config(Policy::Auction);
    cfg.batcher.queue_bound = 1;
    let (mut r, _) = router(cfg, &[profile("a0", "qa", 1)]);
    r.submit(req("r0", "d0", 1.0)).unwrap();
    let second = req("r1", "d1", 1.0);
    let slot = second.slot.clone();
    assert_eq!(r.submit(second), Err(RouterError::QueueFull { hub: 0 }));
    assert_eq!(slot.get(), Some(Outcome::Rejected(RouterError::QueueFull { hub: 0 })));
}

#[test]
fn monopoly_pays_predicted_cost() {
    let (mut r, clock) = router(config(Policy::Auction), &[profile("a0", "qa", 1)]);
    r.submit(req("r0", "d0", 1.0)).unwrap();
    clock.advance_to(10.0);
    let d = &r.tick().unwrap()[0];
    assert!((d.v_true - 5.0).abs() < 1e-9);
    assert_eq!((d.cost, d.welfare), (1.0, 4.0));
    assert_eq!(d.payment, d.cost);
    assert!(!d.fallback);
}

#[test]
fn contention_for_one_slot_charges_displaced_welfare() {
    let (mut r, clock) = router(config(Policy::Auction), &[profile("a0", "qa", 1)]);
    r.submit(req("low", "d0", 1.0)).unwrap();
    r.submit(req("high", "d1", 2.0)).unwrap();
    clock.advance_to(10.0);
    let decisions = r.tick().unwrap();
    assert_eq!(decisions.len(), 1);
    let d = &decisions[0];
    assert_eq!(d.request_id, "high");
    // W(C \ high) = 4, W(C) = w_high = 9: p = 4 - 0 + 1.
    assert_eq!(d.payment, 5.0);
    assert_eq!(r.queued(), 1);
}

#[test]
fn saturated_hub_emits_no_decision() {
    let (mut r, clock) = router(config(Policy::Auction), &[profile("a0", "qa", 1)]);
    r.submit(req("r0", "d0", 1.0)).unwrap();
    clock.advance_to(10.0);
    assert_eq!(r.tick().unwrap().len(), 1);
    r.submit(req("r1", "d1", 1.0)).unwrap();
    clock.advance_to(50.0);
    assert!(r.tick().unwrap().is_empty());
    assert_eq!(r.queued(), 1);
    r.dispatch("r0").unwrap();
    r.on_completion("r0", &obs(0), 60.0).unwrap();
    assert_eq!(r.tick().unwrap()[0].request_id, "r1");
}

#[test]
fn unprofitable_request_falls_back_after_retries() {
    let (mut r, clock) = router(config(Policy::Auction), &[profile("a0", "qa", 2), profile("a1", "qa", 2)]);
    r.submit(req("r0", "d0", 0.1)).unwrap();
    let mut t = 0.0;
    let mut decisions = Vec::new();
    while decisions.is_empty() {
        t += 10.0;
        clock.advance_to(t);
        decisions = r.tick().unwrap();
    }
    let d = &decisions[0];
    assert!(d.fallback);
    assert_eq!(t, 40.0);
    assert_eq!(d.payment, d.cost);
    assert_eq!(d.agent_id, "a0");
    assert!(d.welfare < 0.0);
}

#[test]
fn completion_evicts_stale_ledger_entry_and_frees_slots() {
    let (mut r, clock) = router(config(Policy::Auction), &[profile("a0", "qa", 2)]);
    let first = req("r0", "d0", 1.0);
    let prefix: String = first.prompt.chars().take(first.prompt.chars().count() - 1).collect();
    r.hubs_mut()[0].ledger.record_prompt("a0", "d0", &prefix, 0.0);
    r.submit(first).unwrap();
    r.submit(req("r1", "d1", 1.0)).unwrap();
    clock.advance_to(10.0);
    let decisions = r.tick().unwrap();
    assert!(decisions[0].affinity > 0.9);
    r.dispatch("r0").unwrap();
    r.dispatch("r1").unwrap();
    assert_eq!(r.hubs()[0].agents()[0].inflight(), 2);

    r.on_completion("r0", &obs(0), 20.0).unwrap();
    assert_eq!(r.hubs()[0].agents()[0].inflight(), 1);
    assert_eq!(r.hubs()[0].ledger.get("a0", "d0"), None);

    r.on_completion("r1", &obs(4), 20.0).unwrap();
    assert_eq!(r.hubs()[0].agents()[0].inflight(), 0);
    assert!(r.hubs()[0].ledger.get("a0", "d1").is_some());
    assert_eq!(r.rows().len(), 2);
    assert!(r.on_completion("r1", &obs(4), 20.0).is_err());
}

#[test]
fn exactly_one_outcome_and_no_pipelined_turns() {
    let (mut r, clock) = router(config(Policy::Auction), &[profile("a0", "qa", 1)]);
    let first = req("r0", "d0", 1.0);
    let slot = first.slot.clone();
    r.submit(first).unwrap();
    let mut turn2 = req("r1", "d0", 1.0);
    turn2.turn = 2;
    assert_eq!(r.submit(turn2), Err(RouterError::TurnInFlight { dialogue: "d0".into() }));
    clock.advance_to(10.0);
    r.tick().unwrap();
    r.dispatch("r0").unwrap();
    assert!(!slot.is_filled());
    let row = r.on_completion("r0", &obs(0), 15.0).unwrap();
    assert_eq!(slot.get(), Some(Outcome::Served(Box::new(row))));
    let mut turn2 = req("r1", "d0", 1.0);
    turn2.turn = 2;
    r.submit(turn2).unwrap();
}

#[test]
fn hubs_only_match_their_own_agents() {
    let agents = [profile("c0", "code", 4), profile("m0", "math", 4), profile("c1", "code", 4)];
    let hubs = build_hubs(&agents, 2, HubScheme::Domain).unwrap();
    let clock = VirtualClock::new();
    let mut r = Router::new(config(Policy::Auction), &agents, hubs, Arc::new(clock.clone())).unwrap();
    for i in 0..6 {
        let domain = if i % 2 == 0 { "code" } else { "math" };
        let mut q = PendingRequest::new(format!("r{i}"), format!("d{i}"), 1, domain, "user: hi\n");
        q.value_scale = 1.0;
        r.submit(q).unwrap();
    }
    clock.advance_to(10.0);
    let decisions = r.tick().unwrap();
    assert_eq!(decisions.len(), 6);
    for d in decisions {
        let i: usize = d.request_id[1..].parse().unwrap();
        let expected_hub = i % 2;
        assert_eq!(d.hub, expected_hub);
        assert_eq!(r.hub_config().membership[&d.agent_id], expected_hub);
    }
}

#[test]
fn greedy_affinity_prefers_cached_agent_then_lowest_index() {
    let agents = [profile("a0", "qa", 2), profile("a1", "qa", 2)];
    let (mut r, clock) = router(config(Policy::GreedyAffinity), &agents);
    let q = req("r0", "d0", 1.0);
    r.hubs_mut()[0].ledger.record_prompt("a1", "d0", &q.prompt[..10], 0.0);
    r.submit(q).unwrap();
    r.submit(req("r1", "d1", 1.0)).unwrap();
    clock.advance_to(10.0);
    let d = r.tick().unwrap();
    assert_eq!(d[0].agent_id, "a1");
    assert_eq!(d[1].agent_id, "a0");
    assert_eq!(d[0].payment, d[0].cost);
}

#[test]
fn round_robin_cycles_over_agents_with_room() {
    let agents = [profile("a0", "qa", 1), profile("a1", "qa", 3), profile("a2", "qa", 3)];
    let (mut r, clock) = router(config(Policy::RoundRobin), &agents);
    for i in 0..5 {
        r.submit(req(&format!("r{i}"), &format!("d{i}"), 1.0)).unwrap();
    }
    clock.advance_to(10.0);
    let picks: Vec<String> = r.tick().unwrap().into_iter().map(|d| d.agent_id).collect();
    assert_eq!(picks, ["a0", "a1", "a2", "a1", "a2"]);
}

#[test]
fn random_policy_is_seeded() {
    let agents = [profile("a0", "qa", 8), profile("a1", "qa", 8), profile("a2", "qa", 8)];
    let run = |seed| {
        let mut cfg = config(Policy::Random);
        cfg.seed = seed;
        let (mut r, clock) = router(cfg, &agents);
        for i in 0..12 {
            r.submit(req(&format!("r{i}"), &format!("d{i}"), 1.0)).unwrap();
        }
        clock.advance_to(10.0);
        r.tick().unwrap().into_iter().map(|d| d.agent_id).collect::<Vec<_>>()
    };
    assert_eq!(run(1), run(1));
    assert_eq!(run(1).len(), 12);
}

#[test]
fn submitter_accepts_requests_from_other_threads() {
    let (mut r, clock) = router(config(Policy::Auction), &[profile("a0", "qa", 8)]);
    let handles: Vec<_> = (0..4)
        .map(|i| {
            let s = r.submitter();
            std::thread::spawn(move || s.submit(req(&format!("r{i}"), &format!("d{i}"), 1.0)).unwrap())
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    r.tick().unwrap();
    clock.advance_to(10.0);
    assert_eq!(r.tick().unwrap().len(), 4);
}

#[test]
fn capacity_is_never_exceeded() {
    let agents = [profile("a0", "qa", 2), profile("a1", "qa", 1)];
    let (mut r, clock) = router(config(Policy::Auction), &agents);
    for i in 0..10 {
        r.submit(req(&format!("r{i}"), &format!("d{i}"), 1.0 + i as f64)).unwrap();
    }
    let mut t = 0.0;
    let mut served = 0;
    while served < 10 {
        t += 10.0;
        clock.advance_to(t);
        for d in r.tick().unwrap() {
            r.dispatch(&d.request_id).unwrap();
            for a in r.hubs()[0].agents() {
                assert!(a.inflight() + a.reserved() <= a.profile.capacity);
            }
            r.on_completion(&d.request_id, &obs(0), t).unwrap();
            served += 1;
        }
    }
    assert_eq!(r.rows().len(), 10);
}
