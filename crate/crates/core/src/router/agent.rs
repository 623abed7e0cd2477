use serde::{Deserialize, Serialize};

use super::rate::RateWindow;
use crate::predictor::{AgentLoad, PricingProfile};

/// Static capability of an agent as advertised to the hub.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub id: String,
    /// Relative model scale.
    pub scale: f64,
    pub domain: String,
    /// Concurrent requests the agent accepts.
    pub capacity: u32,
    pub prices: PricingProfile,
}

/// Live view of an agent inside its hub.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub profile: AgentProfile,
    inflight: u32,
    reserved: u32,
    rate: RateWindow,
    pub hub: usize,
}

impl AgentState {
    pub fn new(profile: AgentProfile, hub: usize, rate_window_ms: f64) -> Self {
        AgentState { profile, inflight: 0, reserved: 0, rate: RateWindow::new(rate_window_ms), hub }
    }

    pub fn id(&self) -> &str {
        &self.profile.id
    }

    pub fn inflight(&self) -> u32 {
        self.inflight
    }

    pub fn reserved(&self) -> u32 {
        self.reserved
    }

    /// Slots neither running nor promised to a decided request.
    pub fn free_slots(&self) -> u32 {
        self.profile.capacity.saturating_sub(self.inflight + self.reserved)
    }

    pub fn load(&self, now_ms: f64) -> AgentLoad {
        AgentLoad {
            inflight: self.inflight + self.reserved,
            rate: self.rate.rate_per_sec(now_ms),
            capacity: self.profile.capacity,
        }
    }

    pub fn reserve(&mut self) -> bool {
        if self.free_slots() == 0 {
            return false;
        }
        self.reserved += 1;
        true
    }

    /// Converts a reservation into a running request.
    pub fn dispatch(&mut self, now_ms: f64) -> bool {
        if self.reserved == 0 {
            return false;
        }
        self.reserved -= 1;
        self.inflight += 1;
        self.rate.record(now_ms);
        true
    }

    pub fn release(&mut self) -> bool {
        if self.inflight == 0 {
            return false;
        }
        self.inflight -= 1;
        true
    }

    /// Drops a reservation that will never be dispatched.
    pub fn cancel_reservation(&mut self) -> bool {
        if self.reserved == 0 {
            return false;
        }
        self.reserved -= 1;
        true
    }
}
