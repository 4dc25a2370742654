use std::sync::atomic::{AtomicU64, Ordering};

/// Work done by the agent's own load workers, read by the monitor and by
/// tests.
#[derive(Debug, Default)]
pub struct Counters {
    pub cpu_busy_ns: AtomicU64,
    pub cpu_cycles: AtomicU64,
    pub net_up_bytes: AtomicU64,
    pub net_down_bytes: AtomicU64,
    pub disk_write_bytes: AtomicU64,
    pub disk_read_bytes: AtomicU64,
}

impl Counters {
    pub fn add(counter: &AtomicU64, n: u64) {
        counter.fetch_add(n, Ordering::Relaxed);
    }

    pub fn get(counter: &AtomicU64) -> u64 {
        counter.load(Ordering::Relaxed)
    }

    pub fn net_total(&self) -> u64 {
        Self::get(&self.net_up_bytes) + Self::get(&self.net_down_bytes)
    }

    pub fn disk_total(&self) -> u64 {
        Self::get(&self.disk_write_bytes) + Self::get(&self.disk_read_bytes)
    }
}
