use std::sync::{Arc, Mutex};

use super::{MetricsRow, RouterError};

/// Terminal result delivered to a submitter.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Served(Box<MetricsRow>),
    Rejected(RouterError),
}

/// Write-once cell through which a request's outcome reaches its submitter.
#[derive(Debug, Clone, Default)]
pub struct ResponseSlot {
    cell: Arc<Mutex<Option<Outcome>>>,
}

impl ResponseSlot {
    pub fn new() -> Self {
        ResponseSlot::default()
    }

    /// Stores `outcome` unless one is already present; returns whether it was stored.
    pub fn fill(&self, outcome: Outcome) -> bool {
        let mut cell = self.cell.lock().expect("response slot poisoned");
        if cell.is_some() {
            return false;
        }
        *cell = Some(outcome);
        true
    }

    pub fn get(&self) -> Option<Outcome> {
        self.cell.lock().expect("response slot poisoned").clone()
    }

    pub fn is_filled(&self) -> bool {
        self.cell.lock().expect("response slot poisoned").is_some()
    }
}

/// One dialogue turn awaiting a routing decision.
#[derive(Debug, Clone)]
pub struct PendingRequest {
    pub request_id: String,
    pub run_id: String,
    pub dialogue_id: String,
    /// 1-based.
    pub turn: u32,
    pub source: String,
    pub domain: String,
    pub prompt: String,
    /// Multiplier on the computed valuation giving this client's true value.
    pub value_scale: f64,
    /// Reported value is `report_factor` times the true value.
    pub report_factor: f64,
    pub arrival_ms: f64,
    pub(crate) enqueued_ms: f64,
    pub(crate) retries: u32,
    pub slot: ResponseSlot,
}

impl PendingRequest {
    pub fn new(
        request_id: impl Into<String>,
        dialogue_id: impl Into<String>,
        turn: u32,
        domain: impl Into<String>,
        prompt: impl Into<String>,
    ) -> Self {
        PendingRequest {
            request_id: request_id.into(),
            run_id: String::new(),
            dialogue_id: dialogue_id.into(),
            turn,
            source: String::new(),
            domain: domain.into(),
            prompt: prompt.into(),
            value_scale: 1.0,
            report_factor: 1.0,
            arrival_ms: 0.0,
            enqueued_ms: 0.0,
            retries: 0,
            slot: ResponseSlot::new(),
        }
    }

    pub fn validate(&self) -> Result<(), RouterError> {
        let invalid =
            |reason: &str| RouterError::InvalidRequest { request: self.request_id.clone(), reason: reason.into() };
        if self.turn == 0 {
            return Err(invalid("turn numbers start at 1"));
        }
        if self.prompt.is_empty() {
            return Err(invalid("prompt is empty"));
        }
        if !(self.value_scale.is_finite() && self.value_scale >= 0.0) {
            return Err(invalid("value scale must be a non-negative number"));
        }
        if !(self.report_factor.is_finite() && self.report_factor >= 0.0) {
            return Err(invalid("report factor must be a non-negative number"));
        }
        Ok(())
    }

    pub fn retries(&self) -> u32 {
        self.retries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_accepts_exactly_one_outcome() {
        let slot = ResponseSlot::new();
        let twin = slot.clone();
        assert!(slot.fill(Outcome::Rejected(RouterError::QueueFull { hub: 0 })));
        assert!(!twin.fill(Outcome::Rejected(RouterError::QueueFull { hub: 1 })));
        assert_eq!(twin.get(), Some(Outcome::Rejected(RouterError::QueueFull { hub: 0 })));
    }

    #[test]
    fn validation() {
        assert!(PendingRequest::new("r", "d", 1, "qa", "hi").validate().is_ok());
        assert!(PendingRequest::new("r", "d", 0, "qa", "hi").validate().is_err());
        assert!(PendingRequest::new("r", "d", 1, "qa", "").validate().is_err());
    }
}
