use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{featurize, LoadSnapshot, PredictorPool, RequestFeatures};
use crate::ledger::PrefixLedger;
use crate::simnet::{ExecRngs, RngStreams, SimAgent, SimError, SimTask, SyntheticDialogue};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WarmupConfig {
    /// Dialogues sent to each agent.
    pub dialogues_per_agent: usize,
    /// Turns used from each warm-up dialogue.
    pub turns: u32,
}

impl Default for WarmupConfig {
    fn default() -> Self {
        WarmupConfig { dialogues_per_agent: 2, turns: 4 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WarmupReport {
    pub executions: usize,
    pub per_agent: BTreeMap<String, usize>,
}

/// Seeds predictors and ledger by serving sample dialogues on each agent
/// directly, one request at a time, cycling through the agents.
///
/// Latency labels are capped at the agent's prior latency so that
/// warm-up never teaches the model an optimistic tail.
pub fn warmup(
    pool: &mut PredictorPool,
    ledger: &mut PrefixLedger,
    agents: &mut [&mut SimAgent],
    sample: &[SyntheticDialogue],
    cfg: &WarmupConfig,
    streams: &RngStreams,
) -> Result<WarmupReport, SimError> {
    let mut report = WarmupReport::default();
    if sample.is_empty() || agents.is_empty() {
        return Ok(report);
    }
    let mut jitter = streams.indexed(RngStreams::WARMUP, 0);
    let mut quality = streams.indexed(RngStreams::WARMUP, 1);
    let mut generation = streams.indexed(RngStreams::WARMUP, 2);
    let mut now = 0.0;
    let n_agents = agents.len();
    for w in 0..cfg.dialogues_per_agent {
        for (a, agent) in agents.iter_mut().enumerate() {
            let d = &sample[(w * n_agents + a) % sample.len()];
            let dialogue_id = format!("warmup-{}-{}-{}", agent.id(), w, d.dialogue_id);
            let prior =
                pool.priors(agent.id()).map_err(|_| SimError::UnknownAgent { agent: agent.id().to_string() })?;
            for turn in 1..=cfg.turns.min(d.turn_count()) {
                let prompt = d.prompt(turn);
                let affinity = ledger.compute_affinity(agent.id(), &dialogue_id, &prompt);
                let request = RequestFeatures { prompt_chars: prompt.chars().count(), turn, domain: &d.domain };
                let load = super::AgentLoad { inflight: 0, rate: 0.0, capacity: agent.config.profile.capacity };
                let x = featurize(request, load, affinity.ratio, LoadSnapshot::default(), pool.domains());
                let task = SimTask {
                    prompt: &prompt,
                    dialogue_id: &dialogue_id,
                    domain: &d.domain,
                    gold: &d.turns[turn as usize - 1].gold,
                };
                let exec = agent.execute(
                    task,
                    ExecRngs { jitter: &mut jitter, quality: &mut quality, generation: &mut generation },
                )?;
                agent.finish();
                let mut obs = exec.observation;
                obs.latency_ms = obs.latency_ms.min(prior.latency_ms);
                pool.update(agent.id(), &x, &obs)
                    .map_err(|_| SimError::UnknownAgent { agent: agent.id().to_string() })?;
                now += 1.0;
                ledger.record_prompt(agent.id(), &dialogue_id, &prompt, now);
                report.executions += 1;
                *report.per_agent.entry(agent.id().to_string()).or_default() += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{DomainSet, PredictorConfig, PricingProfile};
    use crate::router::AgentProfile;
    use crate::simnet::{generate_workload, SimAgentConfig, WorkloadConfig};

    fn sim_agent(id: &str) -> SimAgent {
        SimAgent::new(SimAgentConfig {
            profile: AgentProfile {
                id: id.into(),
                scale: 1.0,
                domain: "qa".into(),
                capacity: 2,
                prices: PricingProfile { miss: 0.01, hit: 0.001, out: 0.02 },
            },
            prefill_ms_per_token: 2.0,
            fixed_ms: 30.0,
            queue_ms: 10.0,
            decode_ms_per_token: 5.0,
            acc_match: 0.9,
            acc_off: 0.5,
            cache_tokens: 100_000,
            jitter: 0.1,
            gen_tokens_min: 5,
            gen_tokens_max: 10,
        })
    }

    fn setup() -> (PredictorPool, PrefixLedger, Vec<SimAgent>, Vec<SyntheticDialogue>) {
        let mut pool = PredictorPool::new(PredictorConfig::default(), DomainSet::new(["qa"]));
        let agents = vec![sim_agent("a0"), sim_agent("a1")];
        for a in &agents {
            pool.register(a.id(), None);
        }
        let sample = generate_workload(
            1,
            &WorkloadConfig { dialogues: 3, turns: 4, context_words: 40, ..WorkloadConfig::default() },
        );
        (pool, PrefixLedger::default(), agents, sample)
    }

    #[test]
    fn zero_dialogues_leave_pool_untouched() {
        let (mut pool, mut ledger, mut agents, sample) = setup();
        let before = pool.snapshot();
        let mut refs: Vec<&mut SimAgent> = agents.iter_mut().collect();
        let cfg = WarmupConfig { dialogues_per_agent: 0, turns: 4 };
        let report = warmup(&mut pool, &mut ledger, &mut refs, &sample, &cfg, &RngStreams::new(0)).unwrap();
        assert_eq!(report.executions, 0);
        assert_eq!(pool.snapshot(), before);
        assert!(ledger.is_empty());
    }

    #[test]
    fn every_agent_gets_w_times_t_observations_and_ledger_entries() {
        let (mut pool, mut ledger, mut agents, sample) = setup();
        let mut refs: Vec<&mut SimAgent> = agents.iter_mut().collect();
        let cfg = WarmupConfig { dialogues_per_agent: 2, turns: 3 };
        let report = warmup(&mut pool, &mut ledger, &mut refs, &sample, &cfg, &RngStreams::new(0)).unwrap();
        assert_eq!(report.executions, 12);
        for id in ["a0", "a1"] {
            assert!(pool.observations(id).unwrap() >= 6);
        }
        assert_eq!(ledger.len(), 4);
    }
}
