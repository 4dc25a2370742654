//! Load-generation arithmetic shared by the agent's worker pools.

use alloc::vec::Vec;

use crate::resource::Percentage;

/// Bytes moved per network or storage-bandwidth transfer.
pub const TRANSFER_CHUNK: usize = 64 * 1024;
/// Size of one dummy file written for storage-space load.
pub const FILE_CHUNK: u64 = 1 << 20;
/// Allocation unit for memory load.
pub const MEMORY_BLOCK: u64 = 1 << 20;

/// Busy time of one CPU worker cycle, in milliseconds.
pub const BUSY_MS: f64 = 10.0;

/// Idle time per cycle for a worker consuming `p` percent: `10·(100−p)/p` ms.
pub fn idle_ms(p: f64) -> f64 {
    BUSY_MS * (100.0 - p) / p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyCycle {
    pub busy_ms: f64,
    pub idle_ms: f64,
}

impl DutyCycle {
    /// `None` when nothing should run (`p <= 0`). Values above 100 are
    /// treated as 100.
    pub fn for_percent(p: f64) -> Option<DutyCycle> {
        if p.is_nan() || p <= 0.0 {
            return None;
        }
        let p = p.min(100.0);
        Some(DutyCycle {
            busy_ms: BUSY_MS,
            idle_ms: idle_ms(p),
        })
    }

    pub fn period_ms(&self) -> f64 {
        self.busy_ms + self.idle_ms
    }

    pub fn busy_fraction(&self) -> f64 {
        self.busy_ms / self.period_ms()
    }
}

/// Share of CPU still to be consumed on top of what is already in use.
pub fn residual_cpu(target: Percentage, current_pct: f64) -> f64 {
    target.get() as f64 - current_pct
}

/// Workers started for a bandwidth load: `floor(max·p/100)`.
pub fn worker_count(max_workers: u32, p: Percentage) -> u32 {
    (max_workers as u64 * p.get() as u64 / 100) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkerRole {
    /// Uploads to the data service, or writes scratch files.
    Sender,
    /// Downloads from the data service, or reads scratch files.
    Receiver,
}

impl WorkerRole {
    pub fn for_index(index: u32) -> WorkerRole {
        if index.is_multiple_of(2) {
            WorkerRole::Sender
        } else {
            WorkerRole::Receiver
        }
    }
}

/// `(senders, receivers)` for `n` workers indexed from 0.
pub fn role_split(n: u32) -> (u32, u32) {
    let senders = n.div_ceil(2);
    (senders, n - senders)
}

/// Sizes of the pieces that make up `total` bytes when cut into `chunk`s,
/// the last piece holding the remainder.
pub fn chunk_sizes(total: u64, chunk: u64) -> Vec<u64> {
    assert!(chunk > 0);
    let mut out = Vec::with_capacity((total / chunk) as usize + 1);
    let mut left = total;
    while left > 0 {
        let n = left.min(chunk);
        out.push(n);
        left -= n;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalibrationResult {
    pub max_workers: u32,
    pub saturated_bytes_per_sec: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum CalibrationError {
    #[error("throughput unstable across repeat windows ({first} vs {second} B/s)")]
    Unstable { first: u64, second: u64 },
    #[error("no throughput with one worker; endpoint unreachable")]
    Unreachable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationStep {
    /// Run this many workers for one window and report the throughput.
    Measure { workers: u32 },
    Done(CalibrationResult),
    Failed(CalibrationError),
}

/// Relative gain below which an added worker counts as not helping.
pub const PLATEAU_GAIN: f64 = 0.05;
/// Consecutive low-gain additions that end calibration.
pub const PLATEAU_RUN: u32 = 2;
/// Largest relative spread tolerated between the two one-worker windows.
pub const STABILITY_SPREAD: f64 = 0.5;

/// Drives calibration: one worker measured twice for stability, then one
/// more worker per window until the gain stays under 5% twice in a row.
/// The result is the last count whose addition still paid off.
#[derive(Debug, Clone)]
pub struct Calibrator {
    ceiling: u32,
    pending: u32,
    first_window: Option<u64>,
    previous: u64,
    best: u32,
    best_throughput: u64,
    low_run: u32,
    finished: bool,
}

impl Calibrator {
    pub fn new(ceiling: u32) -> Calibrator {
        Calibrator {
            ceiling: ceiling.max(1),
            pending: 1,
            first_window: None,
            previous: 0,
            best: 1,
            best_throughput: 0,
            low_run: 0,
            finished: false,
        }
    }

    pub fn first_step(&self) -> CalibrationStep {
        CalibrationStep::Measure { workers: 1 }
    }

    pub fn pending_workers(&self) -> u32 {
        self.pending
    }

    /// Feeds the throughput measured with `pending_workers()` workers.
    pub fn record(&mut self, bytes_per_sec: u64) -> CalibrationStep {
        assert!(!self.finished, "calibration already finished");
        if self.pending == 1 {
            let Some(first) = self.first_window else {
                self.first_window = Some(bytes_per_sec);
                return CalibrationStep::Measure { workers: 1 };
            };
            if first == 0 && bytes_per_sec == 0 {
                return self.finish(CalibrationStep::Failed(CalibrationError::Unreachable));
            }
            let hi = first.max(bytes_per_sec) as f64;
            let lo = first.min(bytes_per_sec) as f64;
            if (hi - lo) / hi > STABILITY_SPREAD {
                return self.finish(CalibrationStep::Failed(CalibrationError::Unstable {
                    first,
                    second: bytes_per_sec,
                }));
            }
            self.previous = first.max(bytes_per_sec);
            self.best_throughput = self.previous;
        } else {
            let gain = bytes_per_sec as f64 - self.previous as f64;
            if gain < PLATEAU_GAIN * self.previous as f64 {
                self.low_run += 1;
            } else {
                self.low_run = 0;
                self.best = self.pending;
            }
            self.best_throughput = self.best_throughput.max(bytes_per_sec);
            self.previous = bytes_per_sec;
            if self.low_run >= PLATEAU_RUN {
                return self.done();
            }
        }
        if self.pending >= self.ceiling {
            return self.done();
        }
        self.pending += 1;
        CalibrationStep::Measure { workers: self.pending }
    }

    fn done(&mut self) -> CalibrationStep {
        let result = CalibrationResult {
            max_workers: self.best,
            saturated_bytes_per_sec: self.best_throughput,
        };
        self.finish(CalibrationStep::Done(result))
    }

    fn finish(&mut self, step: CalibrationStep) -> CalibrationStep {
        self.finished = true;
        step
    }
}
