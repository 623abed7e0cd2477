use serde::{Deserialize, Serialize};

use super::Policy;

/// One terminal routing decision with its realized outcome.
///
/// `v` is the true valuation at decision time and `w` the reported
/// welfare the matcher saw; `v_realized` re-values the QoS that actually
/// occurred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_id: String,
    pub batch_id: u64,
    pub request_id: String,
    pub dialogue_id: String,
    pub turn: u32,
    pub agent_id: String,
    pub policy: Policy,
    pub affinity: f64,
    pub l_hat: f64,
    pub c_hat: f64,
    pub q_hat: f64,
    pub v: f64,
    pub v_realized: f64,
    pub w: f64,
    pub payment: f64,
    pub l_obs: f64,
    pub c_obs: f64,
    pub p_obs: bool,
    pub prompt_tokens: u64,
    pub cached_tokens: u64,
    pub fallback: bool,
    pub t_submit: f64,
    pub t_decide: f64,
    pub t_first_token: f64,
    pub t_done: f64,
}

pub const METRICS_COLUMNS: [&str; 25] = [
    "run_id",
    "batch_id",
    "request_id",
    "dialogue_id",
    "turn",
    "agent_id",
    "policy",
    "affinity",
    "l_hat",
    "c_hat",
    "q_hat",
    "v",
    "v_realized",
    "w",
    "payment",
    "l_obs",
    "c_obs",
    "p_obs",
    "prompt_tokens",
    "cached_tokens",
    "fallback",
    "t_submit",
    "t_decide",
    "t_first_token",
    "t_done",
];

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

impl MetricsRow {
    /// Share of the prompt served from cache.
    pub fn hit_rate(&self) -> f64 {
        if self.prompt_tokens == 0 {
            0.0
        } else {
            self.cached_tokens as f64 / self.prompt_tokens as f64
        }
    }

    pub fn ttft_ms(&self) -> f64 {
        self.t_first_token - self.t_decide
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.run_id.clone(),
            self.batch_id.to_string(),
            self.request_id.clone(),
            self.dialogue_id.clone(),
            self.turn.to_string(),
            self.agent_id.clone(),
            self.policy.name().to_string(),
            fixed(self.affinity),
            fixed(self.l_hat),
            fixed(self.c_hat),
            fixed(self.q_hat),
            fixed(self.v),
            fixed(self.v_realized),
            fixed(self.w),
            fixed(self.payment),
            fixed(self.l_obs),
            fixed(self.c_obs),
            self.p_obs.to_string(),
            self.prompt_tokens.to_string(),
            self.cached_tokens.to_string(),
            self.fallback.to_string(),
            fixed(self.t_submit),
            fixed(self.t_decide),
            fixed(self.t_first_token),
            fixed(self.t_done),
        ]
    }
}

/// Renders rows as CSV with a fixed column order and six-decimal floats.
pub fn write_metrics_csv(rows: &[MetricsRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_COLUMNS).expect("in-memory write");
    for row in rows {
        w.write_record(row.record()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn read_metrics_csv(text: &str) -> Result<Vec<MetricsRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn row() -> MetricsRow {
        MetricsRow {
            run_id: "run".into(),
            batch_id: 3,
            request_id: "r1".into(),
            dialogue_id: "d1".into(),
            turn: 2,
            agent_id: "a0".into(),
            policy: Policy::Auction,
            affinity: 0.5,
            l_hat: 120.0,
            c_hat: 2.5,
            q_hat: 0.75,
            v: 6.0,
            v_realized: 7.25,
            w: 3.5,
            payment: 2.5,
            l_obs: 110.0,
            c_obs: 2.0,
            p_obs: true,
            prompt_tokens: 100,
            cached_tokens: 40,
            fallback: false,
            t_submit: 0.0,
            t_decide: 10.0,
            t_first_token: 120.0,
            t_done: 300.0,
        }
    }

    #[test]
    fn header_and_round_trip() {
        let text = write_metrics_csv(&[row()]);
        assert!(text.starts_with("run_id,batch_id,request_id,"));
        assert!(text.contains(",auction,0.500000,"));
        assert_eq!(read_metrics_csv(&text).unwrap(), vec![row()]);
    }

    #[test]
    fn derived_quantities() {
        assert_eq!(row().hit_rate(), 0.4);
        assert_eq!(row().ttft_ms(), 110.0);
    }
}
