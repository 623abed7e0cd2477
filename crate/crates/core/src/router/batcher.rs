use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{PendingRequest, RouterError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatcherConfig {
    pub max_batch_size: usize,
    pub max_wait_ms: f64,
    /// Maximum queued requests per hub.
    pub queue_bound: usize,
}

impl Default for BatcherConfig {
    fn default() -> Self {
        BatcherConfig { max_batch_size: 16, max_wait_ms: 10.0, queue_bound: 4096 }
    }
}

impl BatcherConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_batch_size == 0 {
            return Err("max_batch_size must be at least 1".into());
        }
        if !(self.max_wait_ms >= 0.0 && self.max_wait_ms.is_finite()) {
            return Err("max_wait_ms must be a non-negative number".into());
        }
        if self.queue_bound == 0 {
            return Err("queue_bound must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchReason {
    Size,
    Timeout,
}

#[derive(Debug, Clone)]
pub struct MicroBatch {
    pub requests: Vec<PendingRequest>,
    pub reason: BatchReason,
}

/// FIFO queue cut into batches by size and age thresholds.
#[derive(Debug, Clone)]
pub struct MicroBatcher {
    config: BatcherConfig,
    queue: VecDeque<PendingRequest>,
}

impl MicroBatcher {
    pub fn new(config: BatcherConfig) -> Self {
        MicroBatcher { config, queue: VecDeque::new() }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn push(&mut self, mut request: PendingRequest, now_ms: f64, hub: usize) -> Result<(), RouterError> {
        if self.queue.len() >= self.config.queue_bound {
            return Err(RouterError::QueueFull { hub });
        }
        request.enqueued_ms = now_ms;
        self.queue.push_back(request);
        Ok(())
    }

    /// Re-enters a request that could not be served, ignoring the bound.
    pub(crate) fn requeue(&mut self, mut request: PendingRequest, now_ms: f64) {
        request.enqueued_ms = now_ms;
        self.queue.push_back(request);
    }

    /// When the oldest queued request times out.
    pub fn deadline(&self) -> Option<f64> {
        self.queue.iter().map(|r| r.enqueued_ms).min_by(f64::total_cmp).map(|t| t + self.config.max_wait_ms)
    }

    /// The next batch due at `now_ms`, if any.
    pub fn next_batch(&mut self, now_ms: f64) -> Option<MicroBatch> {
        let size = self.config.max_batch_size;
        let reason = if self.queue.len() >= size {
            BatchReason::Size
        } else if self.deadline().is_some_and(|d| now_ms >= d) {
            BatchReason::Timeout
        } else {
            return None;
        };
        let take = self.queue.len().min(size);
        Some(MicroBatch { requests: self.queue.drain(..take).collect(), reason })
    }

    /// Every batch due at `now_ms`.
    pub fn form_batches(&mut self, now_ms: f64) -> Vec<MicroBatch> {
        std::iter::from_fn(|| self.next_batch(now_ms)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batcher(bound: usize) -> MicroBatcher {
        MicroBatcher::new(BatcherConfig { queue_bound: bound, ..BatcherConfig::default() })
    }

    fn req(i: usize) -> PendingRequest {
        PendingRequest::new(format!("r{i}"), format!("d{i}"), 1, "qa", "p")
    }

    #[test]
    fn timeout_batch_after_max_wait() {
        let mut b = batcher(100);
        for i in 0..5 {
            b.push(req(i), 0.0, 0).unwrap();
        }
        assert!(b.form_batches(9.9).is_empty());
        let batches = b.form_batches(10.0);
        assert_eq!(batches.len(), 1);
        assert_eq!(batches[0].reason, BatchReason::Timeout);
        let ids: Vec<_> = batches[0].requests.iter().map(|r| r.request_id.as_str()).collect();
        assert_eq!(ids, ["r0", "r1", "r2", "r3", "r4"]);
        assert!(b.is_empty());
    }

    #[test]
    fn size_threshold_fires_before_timeout() {
        let mut b = batcher(100);
        for i in 0..33 {
            b.push(req(i), 0.0, 0).unwrap();
        }
        let batches = b.form_batches(0.0);
        assert_eq!(batches.iter().map(|m| m.requests.len()).collect::<Vec<_>>(), [16, 16]);
        assert!(batches.iter().all(|m| m.reason == BatchReason::Size));
        assert_eq!(b.len(), 1);
        assert_eq!(batches[1].requests[0].request_id, "r16");
    }

    #[test]
    fn empty_queue_forms_nothing() {
        assert!(batcher(1).form_batches(1e9).is_empty());
    }

    #[test]
    fn bound_rejects_overflow() {
        let mut b = batcher(1);
        b.push(req(0), 0.0, 3).unwrap();
        assert_eq!(b.push(req(1), 0.0, 3).unwrap_err(), RouterError::QueueFull { hub: 3 });
    }
}
