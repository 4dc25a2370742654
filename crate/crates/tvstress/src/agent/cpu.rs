//! Duty-cycle CPU load: each worker spins for 10 ms of wall clock, then
//! idles for `10·(100−p)/p` ms.

use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use tvstress_core::load::DutyCycle;

use super::counters::Counters;
use super::stop::StopSignal;

#[derive(Debug)]
pub struct CpuLoad {
    stop: Arc<StopSignal>,
    threads: Vec<JoinHandle<()>>,
    duty: DutyCycle,
}

impl CpuLoad {
    pub fn start(workers: usize, duty: DutyCycle, counters: Arc<Counters>) -> CpuLoad {
        let stop = Arc::new(StopSignal::new());
        let threads = (0..workers)
            .map(|i| {
                let stop = stop.clone();
                let counters = counters.clone();
                std::thread::Builder::new()
                    .name(format!("cpu-load-{i}"))
                    .spawn(move || run(duty, &stop, &counters))
                    .expect("spawn cpu worker")
            })
            .collect();
        CpuLoad { stop, threads, duty }
    }

    pub fn workers(&self) -> usize {
        self.threads.len()
    }

    pub fn duty(&self) -> DutyCycle {
        self.duty
    }

    /// Raises the stop flag and waits for every worker to exit.
    pub fn stop(self) {
        self.stop.raise();
        for t in self.threads {
            let _ = t.join();
        }
    }
}

fn run(duty: DutyCycle, stop: &StopSignal, counters: &Counters) {
    let busy = Duration::from_secs_f64(duty.busy_ms / 1000.0);
    let idle = Duration::from_secs_f64(duty.idle_ms / 1000.0);
    while !stop.is_raised() {
        let start = Instant::now();
        while start.elapsed() < busy {
            std::hint::spin_loop();
        }
        Counters::add(&counters.cpu_busy_ns, start.elapsed().as_nanos() as u64);
        Counters::add(&counters.cpu_cycles, 1);
        if !idle.is_zero() && stop.sleep(idle) {
            break;
        }
    }
}

/// Whole-host CPU utilisation from `/proc/stat`, sampled over `window`.
pub fn host_cpu_percent(window: Duration) -> Option<f64> {
    fn read() -> Option<(u64, u64)> {
        let text = std::fs::read_to_string("/proc/stat").ok()?;
        let line = text.lines().find(|l| l.starts_with("cpu "))?;
        let v: Vec<u64> = line.split_whitespace().skip(1).filter_map(|f| f.parse().ok()).collect();
        let total: u64 = v.iter().sum();
        let idle = v.get(3).copied().unwrap_or(0) + v.get(4).copied().unwrap_or(0);
        Some((total, idle))
    }
    let (t0, i0) = read()?;
    std::thread::sleep(window);
    let (t1, i1) = read()?;
    let dt = t1.checked_sub(t0)?;
    if dt == 0 {
        return Some(0.0);
    }
    Some(100.0 * (dt - (i1 - i0).min(dt)) as f64 / dt as f64)
}
