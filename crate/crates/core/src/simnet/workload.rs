use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{RngStreams, SimError};
use crate::router::{serialize_prompt, ChatMessage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainWeight {
    pub domain: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub dialogues: usize,
    pub turns: u32,
    /// Words in each dialogue's knowledge passage.
    pub context_words: usize,
    pub domain_mix: Vec<DomainWeight>,
    pub source: String,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            dialogues: 40,
            turns: 8,
            context_words: 240,
            domain_mix: ["code", "math", "qa"]
                .iter()
                .map(|d| DomainWeight { domain: d.to_string(), weight: 1.0 })
                .collect(),
            source: "synthetic".into(),
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.turns == 0 {
            return Err("turns must be at least 1".into());
        }
        if self.context_words < 2 {
            return Err("context_words must be at least 2".into());
        }
        if self.domain_mix.is_empty() {
            return Err("domain_mix must name at least one domain".into());
        }
        if self.domain_mix.iter().any(|d| d.weight.is_nan() || d.weight < 0.0)
            || self.domain_mix.iter().all(|d| d.weight == 0.0)
        {
            return Err("domain_mix weights must be non-negative and not all zero".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub question: String,
    pub gold: String,
}

/// A multi-turn dialogue over one knowledge passage. Every gold answer is a
/// word of the passage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDialogue {
    pub dialogue_id: String,
    pub domain: String,
    pub source: String,
    pub context: String,
    pub turns: Vec<DialogueTurn>,
}

impl SyntheticDialogue {
    /// Conversation up to and including the question of `turn` (1-based);
    /// earlier turns carry their gold answers.
    pub fn messages(&self, turn: u32) -> Vec<ChatMessage> {
        let mut messages = vec![ChatMessage::new("system", &self.context)];
        for (i, t) in self.turns.iter().take(turn as usize).enumerate() {
            messages.push(ChatMessage::new("user", &t.question));
            if i + 1 < turn as usize {
                messages.push(ChatMessage::new("assistant", &t.gold));
            }
        }
        messages
    }

    pub fn prompt(&self, turn: u32) -> String {
        serialize_prompt(&self.messages(turn))
    }

    pub fn turn_count(&self) -> u32 {
        self.turns.len() as u32
    }
}

const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

fn word<R: Rng>(rng: &mut R) -> String {
    let syllables = rng.gen_range(2..=3);
    (0..syllables).map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap())).collect()
}

/// Seeded synthetic multi-turn workload.
pub fn generate_workload(seed: u64, cfg: &WorkloadConfig) -> Vec<SyntheticDialogue> {
    generate_workload_from(&mut RngStreams::new(seed).stream(RngStreams::WORKLOAD), cfg)
}

/// Same as [`generate_workload`], drawing from a caller-supplied stream.
pub fn generate_workload_from<R: Rng>(rng: &mut R, cfg: &WorkloadConfig) -> Vec<SyntheticDialogue> {
    let total: f64 = cfg.domain_mix.iter().map(|d| d.weight).sum();
    (0..cfg.dialogues)
        .map(|i| {
            let mut pick = rng.gen_range(0.0..total);
            let domain = cfg
                .domain_mix
                .iter()
                .find(|d| {
                    pick -= d.weight;
                    pick < 0.0
                })
                .unwrap_or_else(|| cfg.domain_mix.last().unwrap())
                .domain
                .clone();
            let words: Vec<String> = (0..cfg.context_words.max(2)).map(|_| word(rng)).collect();
            let context = format!("Domain {domain} passage: {}", words.join(" "));
            let turns = (0..cfg.turns)
                .map(|t| {
                    let p = rng.gen_range(0..words.len() - 1);
                    DialogueTurn {
                        question: format!("Question {}: which word follows {}?", t + 1, words[p]),
                        gold: words[p + 1].clone(),
                    }
                })
                .collect();
            SyntheticDialogue { dialogue_id: format!("d{i:04}"), domain, source: cfg.source.clone(), context, turns }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TurnRecord {
    dialogue_id: String,
    domain: String,
    source: String,
    turn: u32,
    question: String,
    gold: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    context: Option<String>,
}

/// One JSON record per turn; the passage rides on each dialogue's first turn.
pub fn dump_workload(dialogues: &[SyntheticDialogue]) -> String {
    let mut out = String::new();
    for d in dialogues {
        for (i, t) in d.turns.iter().enumerate() {
            let rec = TurnRecord {
                dialogue_id: d.dialogue_id.clone(),
                domain: d.domain.clone(),
                source: d.source.clone(),
                turn: i as u32 + 1,
                question: t.question.clone(),
                gold: t.gold.clone(),
                context: (i == 0).then(|| d.context.clone()),
            };
            out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
            out.push('\n');
        }
    }
    out
}

pub fn load_workload(text: &str) -> Result<Vec<SyntheticDialogue>, SimError> {
    let mut dialogues: Vec<SyntheticDialogue> = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let err = |message: String| SimError::Workload { line: n + 1, message };
        let rec: TurnRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if rec.turn == 1 {
            let context = rec.context.ok_or_else(|| err("first turn is missing its context".into()))?;
            dialogues.push(SyntheticDialogue {
                dialogue_id: rec.dialogue_id,
                domain: rec.domain,
                source: rec.source,
                context,
                turns: vec![DialogueTurn { question: rec.question, gold: rec.gold }],
            });
            continue;
        }
        let d = dialogues
            .last_mut()
            .filter(|d| d.dialogue_id == rec.dialogue_id && d.turn_count() + 1 == rec.turn)
            .ok_or_else(|| err(format!("turn {} of `{}` is out of sequence", rec.turn, rec.dialogue_id)))?;
        d.turns.push(DialogueTurn { question: rec.question, gold: rec.gold });
    }
    Ok(dialogues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::PrefixLedger;

    fn small() -> WorkloadConfig {
        WorkloadConfig { dialogues: 5, turns: 4, context_words: 30, ..WorkloadConfig::default() }
    }

    #[test]
    fn same_seed_same_workload() {
        assert_eq!(generate_workload(3, &small()), generate_workload(3, &small()));
        assert_ne!(generate_workload(3, &small()), generate_workload(4, &small()));
        assert!(generate_workload(3, &WorkloadConfig { dialogues: 0, ..small() }).is_empty());
    }

    #[test]
    fn turn_prompts_grow_as_strict_prefixes() {
        for d in generate_workload(9, &small()) {
            for t in 1..d.turn_count() {
                let (p1, p2) = (d.prompt(t), d.prompt(t + 1));
                assert!(p2.starts_with(&p1) && p2.len() > p1.len());
            }
        }
    }

    #[test]
    fn same_agent_affinity_is_prefix_ratio() {
        let d = &generate_workload(1, &small())[0];
        let (p1, p2) = (d.prompt(1), d.prompt(2));
        let mut ledger = PrefixLedger::default();
        ledger.record_prompt("a", &d.dialogue_id, &p1, 0.0);
        let score = ledger.compute_affinity("a", &d.dialogue_id, &p2);
        let expected = p1.chars().count() as f64 / p2.chars().count() as f64;
        assert_eq!(score.ratio, expected);
        assert!(score.ratio < 1.0);
    }

    #[test]
    fn gold_answers_are_in_the_passage() {
        for d in generate_workload(2, &small()) {
            for t in &d.turns {
                assert!(d.context.split_whitespace().any(|w| w == t.gold));
            }
        }
    }

    #[test]
    fn dump_load_round_trip() {
        let w = generate_workload(5, &small());
        assert_eq!(load_workload(&dump_workload(&w)).unwrap(), w);
        let broken = dump_workload(&w).lines().skip(1).collect::<Vec<_>>().join("\n");
        assert!(load_workload(&broken).is_err());
    }

    #[test]
    fn domain_mix_respects_zero_weights() {
        let cfg = WorkloadConfig {
            dialogues: 30,
            domain_mix: vec![
                DomainWeight { domain: "code".into(), weight: 0.0 },
                DomainWeight { domain: "math".into(), weight: 1.0 },
            ],
            ..small()
        };
        assert!(generate_workload(0, &cfg).iter().all(|d| d.domain == "math"));
    }
}
