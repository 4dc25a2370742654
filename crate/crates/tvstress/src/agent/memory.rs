//! Memory load: touched 1 MiB blocks held at a target, re-adjusted every
//! second by a maintenance thread.

use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use tvstress_core::load::MEMORY_BLOCK;

const FILL: u8 = 0xA5;
const MAINTENANCE: Duration = Duration::from_secs(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("allocation failed at {held} of {target} bytes")]
pub struct AllocationFailed {
    pub held: u64,
    pub target: u64,
}

#[derive(Debug, Default)]
struct State {
    target: u64,
    held: u64,
    blocks: Vec<Vec<u8>>,
    degraded: bool,
    stop: bool,
}

impl State {
    fn adjust(&mut self) -> Result<(), AllocationFailed> {
        while self.held > self.target {
            let b = self.blocks.pop().expect("held bytes imply blocks");
            self.held -= b.len() as u64;
        }
        while self.held < self.target {
            let n = (self.target - self.held).min(MEMORY_BLOCK) as usize;
            let mut block = Vec::new();
            if block.try_reserve_exact(n).is_err() {
                self.degraded = true;
                return Err(AllocationFailed {
                    held: self.held,
                    target: self.target,
                });
            }
            block.resize(n, FILL);
            self.held += n as u64;
            self.blocks.push(block);
        }
        self.degraded = false;
        Ok(())
    }
}

#[derive(Debug)]
pub struct MemoryLoad {
    shared: Arc<(Mutex<State>, Condvar)>,
    thread: Option<JoinHandle<()>>,
}

impl MemoryLoad {
    pub fn new() -> MemoryLoad {
        let shared = Arc::new((Mutex::new(State::default()), Condvar::new()));
        let s = shared.clone();
        let thread = std::thread::Builder::new()
            .name("mem-maintain".into())
            .spawn(move || {
                let (lock, cv) = &*s;
                let mut st = lock.lock().unwrap();
                while !st.stop {
                    let _ = st.adjust();
                    st = cv.wait_timeout(st, MAINTENANCE).unwrap().0;
                }
            })
            .expect("spawn memory maintenance");
        MemoryLoad {
            shared,
            thread: Some(thread),
        }
    }

    /// Sets the held-byte target and converges to it before returning.
    pub fn set_target(&self, bytes: u64) -> Result<(), AllocationFailed> {
        let (lock, cv) = &*self.shared;
        let mut st = lock.lock().unwrap();
        st.target = bytes;
        let r = st.adjust();
        cv.notify_all();
        r
    }

    pub fn held(&self) -> u64 {
        self.shared.0.lock().unwrap().held
    }

    pub fn is_degraded(&self) -> bool {
        self.shared.0.lock().unwrap().degraded
    }
}

impl Default for MemoryLoad {
    fn default() -> Self {
        MemoryLoad::new()
    }
}

impl Drop for MemoryLoad {
    fn drop(&mut self) {
        {
            let (lock, cv) = &*self.shared;
            let mut st = lock.lock().unwrap();
            st.stop = true;
            st.target = 0;
            let _ = st.adjust();
            cv.notify_all();
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
