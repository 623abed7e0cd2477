use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{PendingRequest, RouterError};

pub const HEADER_RUN_ID: &str = "X-IEMAS-RUN-ID";
pub const HEADER_DIALOGUE_ID: &str = "X-IEMAS-DIALOGUE-ID";
pub const HEADER_TURN_NUMBER: &str = "X-IEMAS-TURN-NUMBER";
pub const HEADER_SOURCE: &str = "X-IEMAS-SOURCE";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: &str) -> Self {
        ChatMessage { role: role.to_string(), content: content.to_string() }
    }
}

/// Flattens a conversation into the text the prefix ledger compares.
/// Appending messages only ever extends the result.
pub fn serialize_prompt(messages: &[ChatMessage]) -> String {
    messages.iter().map(|m| format!("{}: {}\n", m.role, m.content)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub messages: Vec<ChatMessage>,
    pub domain_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_factor: Option<f64>,
}

/// Transport-neutral form of a tagged chat request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestEnvelope {
    pub headers: BTreeMap<String, String>,
    pub body: EnvelopeBody,
}

impl RequestEnvelope {
    pub fn new(run_id: &str, dialogue_id: &str, turn: u32, source: &str, body: EnvelopeBody) -> Self {
        let headers = [
            (HEADER_RUN_ID, run_id.to_string()),
            (HEADER_DIALOGUE_ID, dialogue_id.to_string()),
            (HEADER_TURN_NUMBER, turn.to_string()),
            (HEADER_SOURCE, source.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        RequestEnvelope { headers, body }
    }

    fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }

    pub fn into_request(self, request_id: &str) -> Result<PendingRequest, RouterError> {
        let invalid = |reason: String| RouterError::InvalidRequest { request: request_id.to_string(), reason };
        let required =
            |name: &str| self.header(name).map(str::to_string).ok_or_else(|| invalid(format!("missing header {name}")));
        let run_id = required(HEADER_RUN_ID)?;
        let dialogue_id = required(HEADER_DIALOGUE_ID)?;
        let turn_text = required(HEADER_TURN_NUMBER)?;
        let turn = turn_text.parse::<u32>().map_err(|_| invalid(format!("bad {HEADER_TURN_NUMBER} `{turn_text}`")))?;
        let source = self.header(HEADER_SOURCE).unwrap_or_default().to_string();

        let mut req = PendingRequest::new(
            request_id,
            dialogue_id,
            turn,
            self.body.domain_tag.clone(),
            serialize_prompt(&self.body.messages),
        );
        req.run_id = run_id;
        req.source = source;
        if let Some(f) = self.body.report_factor {
            req.report_factor = f;
        }
        req.validate()?;
        Ok(req)
    }
}
