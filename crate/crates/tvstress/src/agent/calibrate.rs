//! Worker-count calibration: one more worker per window until throughput
//! stops growing.

use std::io;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use tvstress_core::load::{CalibrationError, CalibrationResult, CalibrationStep, Calibrator};

use super::counters::Counters;
use super::netload::NetLoad;
use super::storage::StorageBwLoad;

/// Worker ceilings, reached only if throughput keeps growing.
pub const MAX_NET_WORKERS: u32 = 32;
pub const MAX_STORAGE_WORKERS: u32 = 16;

/// Runs the calibration state machine with `measure(n)` returning the
/// throughput of `n` workers in bytes per second.
pub fn calibrate_with(
    ceiling: u32,
    mut measure: impl FnMut(u32) -> io::Result<u64>,
) -> Result<CalibrationResult, CalibrationError> {
    let mut cal = Calibrator::new(ceiling);
    let mut step = cal.first_step();
    loop {
        match step {
            CalibrationStep::Measure { workers } => {
                let bps = match measure(workers) {
                    Ok(b) => b,
                    Err(_) if workers == 1 => 0,
                    Err(_) => return Err(CalibrationError::Unreachable),
                };
                step = cal.record(bps);
            }
            CalibrationStep::Done(r) => return Ok(r),
            CalibrationStep::Failed(e) => return Err(e),
        }
    }
}

fn window_rate(window: Duration, read: impl Fn() -> u64) -> u64 {
    // A short settle period keeps connection setup out of the window.
    std::thread::sleep(Duration::from_millis(100));
    let (t0, b0) = (Instant::now(), read());
    std::thread::sleep(window);
    let (t1, b1) = (Instant::now(), read());
    ((b1 - b0) as f64 / (t1 - t0).as_secs_f64()) as u64
}

pub fn calibrate_network(endpoint: &str, window: Duration) -> Result<CalibrationResult, CalibrationError> {
    calibrate_with(MAX_NET_WORKERS, |n| {
        let counters = Arc::new(Counters::default());
        let load = NetLoad::start(endpoint, n, counters.clone())?;
        let bps = window_rate(window, || counters.net_total());
        load.stop();
        Ok(bps)
    })
}

pub fn calibrate_storage(dir: &Path, window: Duration) -> Result<CalibrationResult, CalibrationError> {
    calibrate_with(MAX_STORAGE_WORKERS, |n| {
        let counters = Arc::new(Counters::default());
        let load = StorageBwLoad::start(dir, n, counters.clone())?;
        let bps = window_rate(window, || counters.disk_total());
        load.stop();
        Ok(bps)
    })
}
