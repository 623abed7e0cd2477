use std::collections::VecDeque;

pub const DEFAULT_RATE_WINDOW_MS: f64 = 10_000.0;

/// Event rate over a sliding time window.
#[derive(Debug, Clone)]
pub struct RateWindow {
    window_ms: f64,
    events: VecDeque<f64>,
}

impl Default for RateWindow {
    fn default() -> Self {
        RateWindow::new(DEFAULT_RATE_WINDOW_MS)
    }
}

impl RateWindow {
    pub fn new(window_ms: f64) -> Self {
        RateWindow { window_ms, events: VecDeque::new() }
    }

    pub fn record(&mut self, now_ms: f64) {
        self.events.push_back(now_ms);
        self.expire(now_ms);
    }

    fn expire(&mut self, now_ms: f64) {
        while self.events.front().is_some_and(|&t| t <= now_ms - self.window_ms) {
            self.events.pop_front();
        }
    }

    /// Events per second within `(now - window, now]`.
    pub fn rate_per_sec(&self, now_ms: f64) -> f64 {
        let live = self.events.iter().filter(|&&t| t > now_ms - self.window_ms && t <= now_ms).count();
        live as f64 / (self.window_ms / 1000.0)
    }
}
