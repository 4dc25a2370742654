//! Background sampler for the agent's own CPU and network activity.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use super::counters::Counters;
use super::stop::StopSignal;

const PERIOD: Duration = Duration::from_millis(100);
/// Rates are taken over roughly this much history.
const WINDOW: Duration = Duration::from_secs(1);
/// Shortest window a reading may cover.
const MIN_WINDOW: Duration = Duration::from_millis(200);

#[derive(Debug, Clone, Copy)]
struct Sample {
    at: Instant,
    busy_ns: u64,
    up: u64,
    down: u64,
}

impl Sample {
    fn take(c: &Counters) -> Sample {
        Sample {
            at: Instant::now(),
            busy_ns: Counters::get(&c.cpu_busy_ns),
            up: Counters::get(&c.net_up_bytes),
            down: Counters::get(&c.net_down_bytes),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub cpu_pct: f64,
    pub up_bps: u64,
    pub down_bps: u64,
}

#[derive(Debug)]
pub struct Monitor {
    counters: Arc<Counters>,
    cores: usize,
    history: Arc<Mutex<VecDeque<Sample>>>,
    stop: Arc<StopSignal>,
    thread: Option<JoinHandle<()>>,
}

impl Monitor {
    pub fn start(counters: Arc<Counters>, cores: usize) -> Monitor {
        let history = Arc::new(Mutex::new(VecDeque::from([Sample::take(&counters)])));
        let stop = Arc::new(StopSignal::new());
        let (h, s, c) = (history.clone(), stop.clone(), counters.clone());
        let thread = std::thread::Builder::new()
            .name("agent-monitor".into())
            .spawn(move || {
                while !s.sleep(PERIOD) {
                    let mut h = h.lock().unwrap();
                    h.push_back(Sample::take(&c));
                    while h.len() > 2 && h[1].at.elapsed() >= WINDOW {
                        h.pop_front();
                    }
                }
            })
            .expect("spawn monitor");
        Monitor {
            counters,
            cores: cores.max(1),
            history,
            stop,
            thread: Some(thread),
        }
    }

    /// Rates over the last second, or at least the last 200 ms.
    pub fn rates(&self) -> Rates {
        let base = {
            let h = self.history.lock().unwrap();
            let now = Instant::now();
            h.iter()
                .rev()
                .find(|s| now - s.at >= WINDOW)
                .or_else(|| h.front())
                .copied()
                .expect("history starts non-empty")
        };
        let age = base.at.elapsed();
        if age < MIN_WINDOW {
            std::thread::sleep(MIN_WINDOW - age);
        }
        let now = Sample::take(&self.counters);
        let secs = (now.at - base.at).as_secs_f64();
        let busy = now.busy_ns.saturating_sub(base.busy_ns) as f64 / 1e9;
        let cpu_pct = (100.0 * busy / (secs * self.cores as f64)).clamp(0.0, 100.0);
        Rates {
            cpu_pct,
            up_bps: (now.up.saturating_sub(base.up) as f64 / secs) as u64,
            down_bps: (now.down.saturating_sub(base.down) as f64 / secs) as u64,
        }
    }
}

impl Drop for Monitor {
    fn drop(&mut self) {
        self.stop.raise();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
