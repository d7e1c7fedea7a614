use crate::proto::CrossTrafficProfile;

/// Link parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    /// Propagation delay, s.
    pub delay: f64,
    /// Bytes per second.
    pub bandwidth: f64,
    pub loss: f64,
    /// Drop-tail limit on queued bytes, including the frame in service.
    pub queue_limit: u64,
    pub cross_traffic: Option<CrossTrafficProfile>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig { delay: 0.010, bandwidth: 1.0e6, loss: 0.0, queue_limit: 64_000, cross_traffic: None }
    }
}

/// One direction of a FIFO drop-tail link.
#[derive(Debug, Clone)]
pub struct Link {
    cfg: LinkConfig,
    busy_until: f64,
    pub queue_drops: u64,
    pub random_drops: u64,
    pub non_ip_drops: u64,
}

impl Link {
    pub fn new(cfg: LinkConfig) -> Self {
        Link { cfg, busy_until: 0.0, queue_drops: 0, random_drops: 0, non_ip_drops: 0 }
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    /// Bytes waiting or in service at `now`.
    pub fn backlog(&self, now: f64) -> f64 {
        ((self.busy_until - now) * self.cfg.bandwidth).max(0.0)
    }

    /// Queues a frame of `len` bytes. Returns the time its last bit leaves
    /// the sender, or `None` when the queue is full.
    pub fn serialize(&mut self, now: f64, len: u32) -> Option<f64> {
        if self.backlog(now) + f64::from(len) > self.cfg.queue_limit as f64 {
            self.queue_drops += 1;
            return None;
        }
        let start = self.busy_until.max(now);
        self.busy_until = start + f64::from(len) / self.cfg.bandwidth;
        Some(self.busy_until)
    }

    /// Arrival time at the far end, or `None` for a drop. `u` is a uniform
    /// draw for the loss decision.
    pub fn transmit(&mut self, now: f64, len: u32, u: f64) -> Option<f64> {
        let done = self.serialize(now, len)?;
        if u < self.cfg.loss {
            self.random_drops += 1;
            return None;
        }
        Some(done + self.cfg.delay)
    }
}
