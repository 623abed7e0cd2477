//! Router-side record of the last prompt each agent executed for each
//! dialogue, used as a proxy for the agent's KV-cache contents.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_CAPACITY: usize = 10_000;
pub const DEFAULT_EVICT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LedgerKey {
    pub agent: String,
    pub dialogue: String,
}

impl LedgerKey {
    pub fn new(agent: impl Into<String>, dialogue: impl Into<String>) -> Self {
        LedgerKey { agent: agent.into(), dialogue: dialogue.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    prompt: String,
    updated_at: f64,
    /// Monotone write counter; breaks timestamp ties for LRU eviction.
    seq: u64,
}

/// Cache-overlap score between a prompt and the ledger entry for its dialogue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinityScore {
    pub ratio: f64,
    pub lcp_chars: usize,
    pub prompt_chars: usize,
}

impl AffinityScore {
    pub const NONE: AffinityScore = AffinityScore { ratio: 0.0, lcp_chars: 0, prompt_chars: 0 };

    fn new(lcp_chars: usize, prompt_chars: usize) -> Self {
        AffinityScore { ratio: lcp_chars as f64 / prompt_chars.max(1) as f64, lcp_chars, prompt_chars }
    }
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("snapshot line {line}: {message}")]
    Snapshot { line: usize, message: String },
}

/// Length of the longest common prefix, counted in characters. No
/// normalization is applied.
pub fn lcp(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).count()
}

/// Bounded map from (agent, dialogue) to the last prompt sent there.
/// When full, the least recently updated entry is dropped.
#[derive(Debug, Clone)]
pub struct PrefixLedger {
    entries: HashMap<LedgerKey, Entry>,
    /// (updated_at bits, seq) → key; oldest first.
    order: BTreeMap<(u64, u64), LedgerKey>,
    capacity: usize,
    evict_threshold: f64,
    next_seq: u64,
}

impl Default for PrefixLedger {
    fn default() -> Self {
        PrefixLedger::new(DEFAULT_CAPACITY, DEFAULT_EVICT_THRESHOLD)
    }
}

/// Order-preserving map from a non-negative timestamp to an integer key.
fn time_key(t: f64) -> u64 {
    t.max(0.0).to_bits()
}

impl PrefixLedger {
    pub fn new(capacity: usize, evict_threshold: f64) -> Self {
        PrefixLedger {
            entries: HashMap::new(),
            order: BTreeMap::new(),
            capacity: capacity.max(1),
            evict_threshold,
            next_seq: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn evict_threshold(&self) -> f64 {
        self.evict_threshold
    }

    pub fn get(&self, agent: &str, dialogue: &str) -> Option<&str> {
        self.entries.get(&LedgerKey::new(agent, dialogue)).map(|e| e.prompt.as_str())
    }

    pub fn compute_affinity(&self, agent: &str, dialogue: &str, prompt: &str) -> AffinityScore {
        let prompt_chars = prompt.chars().count();
        match self.get(agent, dialogue) {
            Some(stored) => AffinityScore::new(lcp(prompt, stored), prompt_chars),
            None => AffinityScore { prompt_chars, ..AffinityScore::NONE },
        }
    }

    /// Stores `prompt` as the latest prompt for the key (last writer wins).
    pub fn record_prompt(&mut self, agent: &str, dialogue: &str, prompt: &str, now: f64) {
        let key = LedgerKey::new(agent, dialogue);
        let seq = self.next_seq;
        self.next_seq += 1;
        if let Some(old) = self.entries.remove(&key) {
            self.order.remove(&(time_key(old.updated_at), old.seq));
        }
        self.order.insert((time_key(now), seq), key.clone());
        self.entries.insert(key, Entry { prompt: prompt.to_string(), updated_at: now, seq });
        while self.entries.len() > self.capacity {
            let Some((_, oldest)) = self.order.pop_first() else { break };
            self.entries.remove(&oldest);
        }
    }

    pub fn remove(&mut self, agent: &str, dialogue: &str) -> bool {
        match self.entries.remove(&LedgerKey::new(agent, dialogue)) {
            Some(old) => {
                self.order.remove(&(time_key(old.updated_at), old.seq));
                true
            }
            None => false,
        }
    }

    /// Drops the entry when the agent reports no cached tokens even though
    /// the ledger predicted a strong prefix match, i.e. the agent evicted
    /// its cache behind our back. Returns whether an entry was removed.
    pub fn evict_if_stale(
        &mut self,
        agent: &str,
        dialogue: &str,
        predicted_affinity: f64,
        reported_cached_tokens: u64,
    ) -> bool {
        if reported_cached_tokens == 0 && predicted_affinity >= self.evict_threshold {
            self.remove(agent, dialogue)
        } else {
            false
        }
    }

    /// Newline-delimited snapshot, oldest entry first. Each record is
    /// `agent \t dialogue \t prompt_chars \t sha256-prefix \t updated_at \t prompt`
    /// with tabs, newlines and backslashes in text fields escaped.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for key in self.order.values() {
            let e = &self.entries[key];
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                escape(&key.agent),
                escape(&key.dialogue),
                e.prompt.chars().count(),
                prompt_hash(&e.prompt),
                e.updated_at,
                escape(&e.prompt)
            );
        }
        out
    }

    /// Rebuilds a ledger from [`PrefixLedger::snapshot`] output, checking
    /// each record's length and hash.
    pub fn restore(text: &str, capacity: usize, evict_threshold: f64) -> Result<PrefixLedger, LedgerError> {
        let mut ledger = PrefixLedger::new(capacity, evict_threshold);
        for (n, line) in text.lines().enumerate() {
            let err = |message: String| LedgerError::Snapshot { line: n + 1, message };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", fields.len())));
            }
            let prompt = unescape(fields[5]);
            let chars: usize = fields[2].parse().map_err(|_| err(format!("bad length `{}`", fields[2])))?;
            if chars != prompt.chars().count() {
                return Err(err("prompt length mismatch".into()));
            }
            if fields[3] != prompt_hash(&prompt) {
                return Err(err("prompt hash mismatch".into()));
            }
            let updated_at: f64 = fields[4].parse().map_err(|_| err(format!("bad timestamp `{}`", fields[4])))?;
            ledger.record_prompt(&unescape(fields[0]), &unescape(fields[1]), &prompt, updated_at);
        }
        Ok(ledger)
    }
}

fn prompt_hash(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}
