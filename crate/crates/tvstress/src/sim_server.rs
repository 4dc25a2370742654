//! Network front end of the simulated device: the device control server
//! and the voice assistant, both over one shared [`SimState`].

use std::io::{self, BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use tvstress_core::monkey::DeviceRequest;
use tvstress_core::reply::Reply;
use tvstress_core::sim::{parse_scenario, FaultAction, FaultPlan, FaultTarget, FaultTracker, SimState};
use tvstress_core::voice::{FrameHeader, VoiceFrame, FRAME_HEADER_LEN, SAMPLE_RATE};
use tvstress_core::{Clock, VirtualClock};

use crate::clock::SystemClock;
use crate::net::{self, LineConn};

/// Virtual time added per served command in virtual-clock mode.
pub const VIRTUAL_STEP_MS: u64 = 100;

#[derive(Debug, Clone)]
pub struct SimServerConfig {
    pub device_listen: String,
    pub voice_listen: String,
    pub faults: FaultPlan,
    pub virtual_clock: bool,
}

impl SimServerConfig {
    pub fn loopback() -> Self {
        SimServerConfig {
            device_listen: "127.0.0.1:0".into(),
            voice_listen: "127.0.0.1:0".into(),
            faults: FaultPlan::none(),
            virtual_clock: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimServeError {
    #[error("cannot read scenario {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error(transparent)]
    Scenario(#[from] tvstress_core::sim::ScenarioError),
    #[error("cannot bind {endpoint}: {source}")]
    Bind { endpoint: String, source: io::Error },
}

pub fn load_scenario(path: &Path) -> Result<SimState, SimServeError> {
    let text = std::fs::read_to_string(path).map_err(|source| SimServeError::Read {
        path: path.display().to_string(),
        source,
    })?;
    Ok(SimState::from_scenario(&parse_scenario(&text)?))
}

enum SimClock {
    Real(SystemClock),
    Virtual(VirtualClock),
}

struct Shared {
    state: Mutex<SimState>,
    clock: SimClock,
    device_faults: Mutex<FaultTracker>,
    voice_faults: Mutex<FaultTracker>,
    shutdown: AtomicBool,
    conns: Mutex<Vec<TcpStream>>,
    /// Id and stream of the connection that owns the device.
    active_device: Mutex<Option<(u64, TcpStream)>>,
}

impl Shared {
    /// Runs one atomic state transaction at the current simulated time.
    fn with_state<T>(&self, f: impl FnOnce(&mut SimState) -> T) -> T {
        let mut st = self.state.lock().unwrap();
        let now = match &self.clock {
            SimClock::Real(c) => c.now_ms(),
            SimClock::Virtual(c) => c.advance(VIRTUAL_STEP_MS),
        };
        st.tick(now);
        f(&mut st)
    }

    fn track(&self, s: &TcpStream) {
        if let Ok(c) = s.try_clone() {
            let mut list = self.conns.lock().unwrap();
            list.retain(|s| s.peer_addr().is_ok());
            list.push(c);
        }
    }
}

pub struct SimServer {
    shared: Arc<Shared>,
    device_addr: SocketAddr,
    voice_addr: SocketAddr,
    threads: Vec<JoinHandle<()>>,
}

impl std::fmt::Debug for SimServer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimServer")
            .field("device_addr", &self.device_addr)
            .field("voice_addr", &self.voice_addr)
            .finish_non_exhaustive()
    }
}

fn bind(endpoint: &str) -> Result<TcpListener, SimServeError> {
    net::resolve(endpoint)
        .and_then(TcpListener::bind)
        .map_err(|source| SimServeError::Bind {
            endpoint: endpoint.to_string(),
            source,
        })
}

impl SimServer {
    pub fn start(state: SimState, cfg: &SimServerConfig) -> Result<SimServer, SimServeError> {
        let device = bind(&cfg.device_listen)?;
        let voice = bind(&cfg.voice_listen)?;
        let addr = |l: &TcpListener, e: &str| {
            l.local_addr().map_err(|source| SimServeError::Bind {
                endpoint: e.to_string(),
                source,
            })
        };
        let device_addr = addr(&device, &cfg.device_listen)?;
        let voice_addr = addr(&voice, &cfg.voice_listen)?;
        let plan_for = |t: FaultTarget| if cfg.faults.apply_to == t { cfg.faults } else { FaultPlan::none() };
        let shared = Arc::new(Shared {
            state: Mutex::new(state),
            clock: if cfg.virtual_clock {
                SimClock::Virtual(VirtualClock::new(0))
            } else {
                SimClock::Real(SystemClock::new())
            },
            device_faults: Mutex::new(FaultTracker::new(plan_for(FaultTarget::Device))),
            voice_faults: Mutex::new(FaultTracker::new(plan_for(FaultTarget::Voice))),
            shutdown: AtomicBool::new(false),
            conns: Mutex::new(Vec::new()),
            active_device: Mutex::new(None),
        });
        let s1 = shared.clone();
        let s2 = shared.clone();
        let threads = vec![
            std::thread::Builder::new()
                .name("sim-device".into())
                .spawn(move || device_accept(device, s1))
                .expect("spawn device server"),
            std::thread::Builder::new()
                .name("sim-voice".into())
                .spawn(move || voice_accept(voice, s2))
                .expect("spawn voice server"),
        ];
        Ok(SimServer {
            shared,
            device_addr,
            voice_addr,
            threads,
        })
    }

    pub fn device_addr(&self) -> SocketAddr {
        self.device_addr
    }

    pub fn voice_addr(&self) -> SocketAddr {
        self.voice_addr
    }

    /// Runs `f` on the live state, for inspection or adjustment.
    pub fn inspect<T>(&self, f: impl FnOnce(&mut SimState) -> T) -> T {
        f(&mut self.shared.state.lock().unwrap())
    }

    /// `(accepted connections, dropped connections)` on the device port.
    pub fn device_fault_counts(&self) -> (u32, u32) {
        let t = self.shared.device_faults.lock().unwrap();
        (t.accepted(), t.drops())
    }

    pub fn voice_fault_counts(&self) -> (u32, u32) {
        let t = self.shared.voice_faults.lock().unwrap();
        (t.accepted(), t.drops())
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if self.shared.shutdown.swap(true, Ordering::AcqRel) {
            return;
        }
        for a in [self.device_addr, self.voice_addr] {
            let _ = TcpStream::connect_timeout(&a, Duration::from_secs(1));
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
        for s in self.shared.conns.lock().unwrap().drain(..) {
            let _ = s.shutdown(Shutdown::Both);
        }
    }
}

impl Drop for SimServer {
    fn drop(&mut self) {
        self.stop();
    }
}

/// True if the peer has closed the stream.
fn is_closed(s: &TcpStream) -> bool {
    if s.set_nonblocking(true).is_err() {
        return true;
    }
    let mut b = [0u8; 1];
    let closed = match s.peek(&mut b) {
        Ok(0) => true,
        Ok(_) => false,
        Err(e) => e.kind() != io::ErrorKind::WouldBlock,
    };
    let _ = s.set_nonblocking(false);
    closed
}

/// How long a new device client waits for the previous one to finish its
/// last exchange before being turned away.
const TAKEOVER_GRACE: Duration = Duration::from_millis(200);

/// Claims the device for connection `id` if no live client holds it.
fn claim_device(shared: &Shared, id: u64, stream: &TcpStream) -> bool {
    let deadline = std::time::Instant::now() + TAKEOVER_GRACE;
    loop {
        {
            let mut active = shared.active_device.lock().unwrap();
            let free = match active.as_ref() {
                None => true,
                Some((_, old)) if is_closed(old) => {
                    let _ = old.shutdown(Shutdown::Both);
                    true
                }
                Some(_) => false,
            };
            if free {
                *active = stream.try_clone().ok().map(|s| (id, s));
                return true;
            }
        }
        if std::time::Instant::now() >= deadline {
            return false;
        }
        std::thread::sleep(Duration::from_millis(10));
    }
}

fn device_accept(listener: TcpListener, shared: Arc<Shared>) {
    for (id, stream) in (0u64..).zip(listener.incoming()) {
        if shared.shutdown.load(Ordering::Acquire) {
            return;
        }
        let Ok(mut stream) = stream else { continue };
        let _ = stream.set_nodelay(true);
        if !claim_device(&shared, id, &stream) {
            let _ = stream.write_all(b"ERROR:busy\n");
            continue;
        }
        shared.track(&stream);
        shared.device_faults.lock().unwrap().on_connect();
        let s = shared.clone();
        let _ = std::thread::Builder::new()
            .name("sim-device-conn".into())
            .spawn(move || {
                let _ = serve_device(&stream, &s);
                let _ = stream.shutdown(Shutdown::Both);
                let mut active = s.active_device.lock().unwrap();
                if active.as_ref().is_some_and(|(owner, _)| *owner == id) {
                    *active = None;
                }
            });
    }
}

fn serve_device(stream: &TcpStream, shared: &Shared) -> io::Result<()> {
    let mut conn = LineConn::new(stream.try_clone()?)?;
    while let Some(line) = conn.recv_opt()? {
        match shared.device_faults.lock().unwrap().on_command() {
            FaultAction::Drop => return Ok(()),
            FaultAction::Fail => {
                conn.send("ERROR:injected")?;
                continue;
            }
            FaultAction::Serve => {}
        }
        let req = match DeviceRequest::parse(&line) {
            Ok(r) => r,
            Err(e) => {
                conn.send(&Reply::Error(e.to_string()).to_string())?;
                continue;
            }
        };
        let resp = shared.with_state(|st| st.handle_device(&req));
        (&*stream).write_all(resp.encode().as_bytes())?;
        if req == DeviceRequest::Quit {
            return Ok(());
        }
    }
    Ok(())
}

fn voice_accept(listener: TcpListener, shared: Arc<Shared>) {
    for stream in listener.incoming() {
        if shared.shutdown.load(Ordering::Acquire) {
            return;
        }
        let Ok(stream) = stream else { continue };
        shared.track(&stream);
        let s = shared.clone();
        let _ = std::thread::Builder::new()
            .name("sim-voice-conn".into())
            .spawn(move || {
                let _ = serve_voice(&stream, &s);
                let _ = stream.shutdown(Shutdown::Both);
            });
    }
}

fn serve_voice(stream: &TcpStream, shared: &Shared) -> io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(10)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream.try_clone()?;
    let action = {
        let mut t = shared.voice_faults.lock().unwrap();
        t.on_connect();
        t.on_command()
    };
    let reply = |w: &mut TcpStream, r: Reply| net::write_line(w, &r.to_string());
    let badframe = || Reply::Error("badframe".into());
    let mut header = [0u8; FRAME_HEADER_LEN];
    reader.read_exact(&mut header)?;
    let header = match FrameHeader::decode(&header) {
        Ok(h) => h,
        Err(_) => return reply(&mut writer, badframe()),
    };
    let mut body = vec![0u8; header.body_len()];
    reader.read_exact(&mut body)?;
    match action {
        FaultAction::Drop => return Ok(()),
        FaultAction::Fail => return reply(&mut writer, Reply::Error("injected".into())),
        FaultAction::Serve => {}
    }
    let frame = match VoiceFrame::decode_body(header, &body) {
        Ok(f) if f.sample_rate == SAMPLE_RATE => f,
        _ => return reply(&mut writer, badframe()),
    };
    let r = shared.with_state(|st| st.handle_voice(&frame.into_stream()));
    reply(&mut writer, r)
}
