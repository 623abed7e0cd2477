use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

/// Monotone millisecond time source shared by the router and its driver.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> f64;
}

/// Simulated time, advanced explicitly by the event loop.
#[derive(Debug, Clone, Default)]
pub struct VirtualClock {
    bits: Arc<AtomicU64>,
}

impl VirtualClock {
    pub fn new() -> Self {
        VirtualClock::default()
    }

    /// Moves time forward; earlier instants are ignored so time never runs back.
    pub fn advance_to(&self, t_ms: f64) {
        let mut current = self.bits.load(Ordering::SeqCst);
        while t_ms > f64::from_bits(current) {
            match self.bits.compare_exchange(current, t_ms.to_bits(), Ordering::SeqCst, Ordering::SeqCst) {
                Ok(_) => return,
                Err(seen) => current = seen,
            }
        }
    }
}

impl Clock for VirtualClock {
    fn now_ms(&self) -> f64 {
        f64::from_bits(self.bits.load(Ordering::SeqCst))
    }
}

/// Real elapsed time since construction.
#[derive(Debug, Clone)]
pub struct WallClock {
    start: Instant,
}

impl Default for WallClock {
    fn default() -> Self {
        WallClock { start: Instant::now() }
    }
}

impl Clock for WallClock {
    fn now_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1000.0
    }
}
