use super::layout::Sub;

/// One delayed fan-out: a spike of `(part, sub, pre_slot, pre_column)` reaching
/// every minicolumn of `post_slot` in the same subnetwork. The delivered
/// current is the corresponding weight row, read at arrival time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FanOut {
    pub part: u8,
    pub sub: Sub,
    pub pre_slot: u16,
    pub pre_column: u16,
    pub post_slot: u16,
    /// Timestep the presynaptic spike was emitted.
    pub emitted: u64,
}

/// Pending deliveries keyed by arrival timestep, stored as a ring over the
/// maximum delay.
#[derive(Debug, Clone)]
pub struct SpikeQueue {
    buckets: Vec<Vec<FanOut>>,
    now: u64,
    pending: usize,
}

impl SpikeQueue {
    /// `horizon` must exceed the largest delay that will be scheduled.
    pub fn new(horizon: usize) -> Self {
        SpikeQueue {
            buckets: vec![Vec::new(); horizon.max(1)],
            now: 0,
            pending: 0,
        }
    }

    pub fn horizon(&self) -> usize {
        self.buckets.len()
    }

    pub fn len(&self) -> usize {
        self.pending
    }

    pub fn is_empty(&self) -> bool {
        self.pending == 0
    }

    pub fn push(&mut self, arrival: u64, ev: FanOut) {
        assert!(
            arrival >= self.now && arrival - self.now < self.buckets.len() as u64,
            "delivery at {arrival} outside queue horizon (now {})",
            self.now
        );
        let h = self.buckets.len();
        self.buckets[(arrival % h as u64) as usize].push(ev);
        self.pending += 1;
    }

    /// Removes and returns everything arriving at `t`; advances the clock.
    pub fn take(&mut self, t: u64, out: &mut Vec<FanOut>) {
        debug_assert!(t >= self.now);
        self.now = t;
        let h = self.buckets.len();
        let bucket = &mut self.buckets[(t % h as u64) as usize];
        self.pending -= bucket.len();
        out.append(bucket);
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&FanOut) -> bool) {
        let mut pending = 0;
        for b in &mut self.buckets {
            b.retain(&mut keep);
            pending += b.len();
        }
        self.pending = pending;
    }

    pub fn clear(&mut self, now: u64) {
        for b in &mut self.buckets {
            b.clear();
        }
        self.pending = 0;
        self.now = now;
    }
}
