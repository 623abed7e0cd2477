use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::{ExecRngs, RngStreams, SimAgent, SimError, SimRng, SimTask, SyntheticDialogue};
use crate::predictor::Observation;
use crate::router::{Clock, MetricsRow, PendingRequest, Router, VirtualClock};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Dialogues in progress at once.
    pub concurrency: usize,
    /// Pause between a turn's completion and the next turn's submission.
    pub think_time_ms: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { concurrency: 12, think_time_ms: 50.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    /// One row per served turn, in completion order.
    pub rows: Vec<MetricsRow>,
    pub end_ms: f64,
}

#[derive(Debug)]
enum Event {
    Submit { dialogue: usize, turn: u32 },
    Complete { request_id: String, agent: usize, dialogue: usize, turn: u32, obs: Observation, t_first_token: f64 },
    Tick,
}

struct Scheduled {
    at: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed so the max-heap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.total_cmp(&self.at).then(other.seq.cmp(&self.seq))
    }
}

struct AgentRngs {
    jitter: SimRng,
    quality: SimRng,
    generation: SimRng,
}

struct EventQueue {
    heap: BinaryHeap<Scheduled>,
    seq: u64,
}

impl EventQueue {
    fn push(&mut self, at: f64, event: Event) {
        self.heap.push(Scheduled { at, seq: self.seq, event });
        self.seq += 1;
    }
}

/// Runs `dialogues` through `router` against `agents` on a virtual clock.
///
/// Each dialogue submits its turns one at a time; at most
/// `cfg.concurrency` dialogues are active, and a new one starts when one
/// finishes. `clock` must be the clock the router was built with.
pub fn run_simulation(
    router: &mut Router,
    clock: &VirtualClock,
    agents: &mut [SimAgent],
    dialogues: &[SyntheticDialogue],
    cfg: &EngineConfig,
    streams: &RngStreams,
) -> Result<SimOutcome, SimError> {
    let index: BTreeMap<String, usize> = agents.iter().enumerate().map(|(i, a)| (a.id().to_string(), i)).collect();
    let mut rngs: Vec<AgentRngs> = (0..agents.len())
        .map(|i| AgentRngs {
            jitter: streams.indexed(RngStreams::JITTER, i),
            quality: streams.indexed(RngStreams::QUALITY, i),
            generation: streams.indexed(RngStreams::GENERATION, i),
        })
        .collect();
    let mut queue = EventQueue { heap: BinaryHeap::new(), seq: 0 };
    let start = clock.now_ms();
    let active = cfg.concurrency.max(1).min(dialogues.len());
    for d in 0..active {
        queue.push(start, Event::Submit { dialogue: d, turn: 1 });
    }
    let mut next_dialogue = active;
    let mut tick_at: Option<f64> = None;
    let mut rows = Vec::new();

    while let Some(Scheduled { at, event, .. }) = queue.heap.pop() {
        clock.advance_to(at);
        let now = clock.now_ms();
        match event {
            Event::Submit { dialogue, turn } => {
                let d = &dialogues[dialogue];
                let mut req = PendingRequest::new(
                    format!("{}-t{}", d.dialogue_id, turn),
                    d.dialogue_id.clone(),
                    turn,
                    d.domain.clone(),
                    d.prompt(turn),
                );
                req.source = d.source.clone();
                router.submit(req)?;
            }
            Event::Complete { request_id, agent, dialogue, turn, obs, t_first_token } => {
                agents[agent].finish();
                rows.push(router.on_completion(&request_id, &obs, t_first_token)?);
                if turn < dialogues[dialogue].turn_count() {
                    queue.push(now + cfg.think_time_ms, Event::Submit { dialogue, turn: turn + 1 });
                } else if next_dialogue < dialogues.len() {
                    queue.push(now, Event::Submit { dialogue: next_dialogue, turn: 1 });
                    next_dialogue += 1;
                }
            }
            Event::Tick => {
                if tick_at.is_some_and(|t| t <= now) {
                    tick_at = None;
                }
            }
        }

        for decision in router.tick()? {
            let i = *index
                .get(&decision.agent_id)
                .ok_or_else(|| SimError::UnknownAgent { agent: decision.agent_id.clone() })?;
            let (dialogue, turn) = parse_request_id(&decision.request_id, dialogues);
            let d = &dialogues[dialogue];
            let prompt = d.prompt(turn);
            let task = SimTask {
                prompt: &prompt,
                dialogue_id: &d.dialogue_id,
                domain: &d.domain,
                gold: &d.turns[turn as usize - 1].gold,
            };
            router.dispatch(&decision.request_id)?;
            let r = &mut rngs[i];
            let exec = match agents[i].execute(
                task,
                ExecRngs { jitter: &mut r.jitter, quality: &mut r.quality, generation: &mut r.generation },
            ) {
                Ok(exec) => exec,
                Err(e) => {
                    router.abort(&decision.request_id, &e.to_string())?;
                    return Err(e);
                }
            };
            let t_first_token = now + exec.observation.latency_ms;
            queue.push(
                t_first_token + exec.decode_ms,
                Event::Complete {
                    request_id: decision.request_id,
                    agent: i,
                    dialogue,
                    turn,
                    obs: exec.observation,
                    t_first_token,
                },
            );
        }

        if let Some(deadline) = router.next_deadline() {
            if deadline > now && tick_at.is_none_or(|t| deadline < t) {
                tick_at = Some(deadline);
                queue.push(deadline, Event::Tick);
            }
        }
    }
    Ok(SimOutcome { rows, end_ms: clock.now_ms() })
}

fn parse_request_id(id: &str, dialogues: &[SyntheticDialogue]) -> (usize, u32) {
    let (dialogue_id, turn) = id.rsplit_once("-t").expect("request ids are built by the engine");
    let dialogue = dialogues.iter().position(|d| d.dialogue_id == dialogue_id).expect("request ids name a dialogue");
    (dialogue, turn.parse().expect("request ids carry a turn number"))
}
