use hubroute_core::ledger::PrefixLedger;
use hubroute_core::predictor::{
    featurize, AgentLoad, DomainSet, FeatureVector, LoadSnapshot, Observation, PredictorConfig, PredictorPool,
    RequestFeatures, TokenUsage,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Sample {
    prompt_chars: usize,
    turn: u32,
    domain: usize,
    inflight: u32,
    affinity: f64,
    latency_ms: f64,
    cost: f64,
    correct: bool,
}

fn sample() -> impl Strategy<Value = Sample> {
    (0usize..20_000, 1u32..12, 0usize..3, 0u32..8, 0.0f64..=1.0, 0.0f64..1e5, 0.0f64..1e3, any::<bool>()).prop_map(
        |(prompt_chars, turn, domain, inflight, affinity, latency_ms, cost, correct)| Sample {
            prompt_chars,
            turn,
            domain,
            inflight,
            affinity,
            latency_ms,
            cost,
            correct,
        },
    )
}

const DOMAINS: [&str; 3] = ["code", "math", "qa"];

fn features(s: &Sample, domains: &DomainSet) -> FeatureVector {
    featurize(
        RequestFeatures { prompt_chars: s.prompt_chars, turn: s.turn, domain: DOMAINS[s.domain] },
        AgentLoad { inflight: s.inflight, rate: s.inflight as f64 * 0.5, capacity: 4 },
        s.affinity,
        LoadSnapshot { router_inflight: s.inflight * 2, router_rate: 3.0 },
        domains,
    )
}

fn observation(s: &Sample) -> Observation {
    Observation {
        latency_ms: s.latency_ms,
        usage: TokenUsage { prompt: s.prompt_chars as u64 / 4, hit: 0, generated: 10 },
        cost: s.cost,
        correct: s.correct,
    }
}

fn pool(agents: &[&str]) -> PredictorPool {
    let mut pool = PredictorPool::new(PredictorConfig::default(), DomainSet::new(DOMAINS));
    for a in agents {
        pool.register(a, None);
    }
    pool
}

proptest! {
    #[test]
    fn predictions_respect_their_ranges(stream in prop::collection::vec(sample(), 0..60), probe in sample()) {
        let mut p = pool(&["a"]);
        let domains = p.domains().clone();
        for s in &stream {
            p.update("a", &features(s, &domains), &observation(s)).unwrap();
        }
        let q = p.predict("a", &features(&probe, &domains)).unwrap();
        prop_assert!(q.latency_ms >= 0.0 && q.latency_ms.is_finite());
        prop_assert!(q.cost >= 0.0 && q.cost.is_finite());
        prop_assert!((0.0..=1.0).contains(&q.quality));
    }

    #[test]
    fn updating_one_agent_leaves_others_unchanged(stream in prop::collection::vec(sample(), 1..40), probe in sample()) {
        let mut p = pool(&["a", "b"]);
        let domains = p.domains().clone();
        let x = features(&probe, &domains);
        let before = p.predict("b", &x).unwrap();
        for s in &stream {
            p.update("a", &features(s, &domains), &observation(s)).unwrap();
        }
        prop_assert_eq!(p.predict("b", &x).unwrap(), before);
        prop_assert_eq!(p.observations("b").unwrap(), 0);
    }

    #[test]
    fn same_updates_give_same_state(stream in prop::collection::vec(sample(), 0..40), probe in sample()) {
        let run = || {
            let mut p = pool(&["a"]);
            let domains = p.domains().clone();
            for s in &stream {
                p.update("a", &features(s, &domains), &observation(s)).unwrap();
            }
            (p.snapshot(), p.predict("a", &features(&probe, &domains)).unwrap())
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn ledger_holds_one_entry_per_key_within_its_bound(
        writes in prop::collection::vec((0usize..4, 0usize..6, "[ab]{0,12}"), 0..80),
        capacity in 1usize..10,
    ) {
        let mut ledger = PrefixLedger::new(capacity, 0.5);
        for (t, (agent, dialogue, prompt)) in writes.iter().enumerate() {
            ledger.record_prompt(&format!("a{agent}"), &format!("d{dialogue}"), prompt, t as f64);
            prop_assert!(ledger.len() <= capacity);
            prop_assert_eq!(ledger.get(&format!("a{agent}"), &format!("d{dialogue}")), Some(prompt.as_str()));
        }
    }

    #[test]
    fn switching_agents_loses_affinity(prompt in ".{0,30}", other in 1usize..5) {
        let mut ledger = PrefixLedger::default();
        ledger.record_prompt("a0", "d", &prompt, 0.0);
        let score = ledger.compute_affinity(&format!("a{other}"), "d", &prompt);
        prop_assert_eq!(score.ratio, 0.0);
        prop_assert_eq!(score.lcp_chars, 0);
    }
}
