//! TCP sink/source used as the far end of network load. Optional rate caps
//! per connection and in total make saturation reproducible on loopback.

use std::io::{self, BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use tvstress_core::agent_proto::DataRequest;
use tvstress_core::load::TRANSFER_CHUNK;

use crate::net;

/// Largest transfer a single request may ask for.
pub const MAX_TRANSFER: u64 = 64 << 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DataServiceConfig {
    pub per_connection_bps: Option<u64>,
    pub total_bps: Option<u64>,
}

/// How far behind schedule a pacer may fall and still catch up, so sleep
/// overshoot does not lower the long-run rate.
const PACER_SLACK: Duration = Duration::from_millis(50);

/// Hands out back-to-back time slots at a fixed byte rate.
#[derive(Debug)]
struct Pacer {
    bytes_per_sec: f64,
    next_free: Mutex<Option<Instant>>,
}

impl Pacer {
    fn new(bps: u64) -> Self {
        Pacer {
            bytes_per_sec: bps as f64,
            next_free: Mutex::new(None),
        }
    }

    /// Reserves time for `n` bytes and returns when that slot ends.
    fn reserve(&self, n: usize) -> Instant {
        let mut next = self.next_free.lock().unwrap();
        let now = Instant::now();
        let floor = now.checked_sub(PACER_SLACK).unwrap_or(now);
        let start = next.map_or(now, |t| t.max(floor));
        let end = start + Duration::from_secs_f64(n as f64 / self.bytes_per_sec);
        *next = Some(end);
        end
    }
}

fn sleep_until(t: Instant) {
    let now = Instant::now();
    if t > now {
        std::thread::sleep(t - now);
    }
}

#[derive(Debug)]
pub struct DataService {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    conns: Arc<Mutex<Vec<TcpStream>>>,
    thread: Option<JoinHandle<()>>,
}

impl DataService {
    pub fn bind(listen: &str, config: DataServiceConfig) -> io::Result<DataService> {
        let listener = TcpListener::bind(net::resolve(listen)?)?;
        let addr = listener.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let conns: Arc<Mutex<Vec<TcpStream>>> = Arc::new(Mutex::new(Vec::new()));
        let total = config.total_bps.map(|b| Arc::new(Pacer::new(b)));
        let (sd, cs) = (shutdown.clone(), conns.clone());
        let thread = std::thread::Builder::new().name("data-service".into()).spawn(move || {
            for stream in listener.incoming() {
                if sd.load(Ordering::Acquire) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let _ = stream.set_nodelay(true);
                if let Ok(c) = stream.try_clone() {
                    let mut list = cs.lock().unwrap();
                    list.retain(|s| s.peer_addr().is_ok());
                    list.push(c);
                }
                let per_conn = config.per_connection_bps.map(Pacer::new);
                let total = total.clone();
                let _ = std::thread::Builder::new()
                    .name("data-conn".into())
                    .spawn(move || serve(stream, per_conn, total));
            }
        })?;
        Ok(DataService {
            addr,
            shutdown,
            conns,
            thread: Some(thread),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if self.shutdown.swap(true, Ordering::AcqRel) {
            return;
        }
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
        for s in self.conns.lock().unwrap().drain(..) {
            let _ = s.shutdown(Shutdown::Both);
        }
    }
}

impl Drop for DataService {
    fn drop(&mut self) {
        self.stop();
    }
}

fn pace(n: usize, per_conn: &Option<Pacer>, total: &Option<Arc<Pacer>>) {
    if let Some(p) = per_conn {
        sleep_until(p.reserve(n));
    }
    if let Some(p) = total {
        sleep_until(p.reserve(n));
    }
}

fn serve(stream: TcpStream, per_conn: Option<Pacer>, total: Option<Arc<Pacer>>) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    let mut buf = vec![0xE1u8; TRANSFER_CHUNK];
    while let Some(line) = net::read_line(&mut reader)? {
        let req = match DataRequest::parse(&line) {
            Some(r) if r.len() <= MAX_TRANSFER => r,
            _ => {
                net::write_line(&mut writer, "ERROR:bad request")?;
                return Ok(());
            }
        };
        let mut left = req.len();
        match req {
            DataRequest::Upload(_) => {
                while left > 0 {
                    let n = left.min(TRANSFER_CHUNK as u64) as usize;
                    reader.read_exact(&mut buf[..n])?;
                    pace(n, &per_conn, &total);
                    left -= n as u64;
                }
                writer.write_all(b"OK\n")?;
            }
            DataRequest::Download(_) => {
                while left > 0 {
                    let n = left.min(TRANSFER_CHUNK as u64) as usize;
                    pace(n, &per_conn, &total);
                    writer.write_all(&buf[..n])?;
                    left -= n as u64;
                }
            }
        }
    }
    Ok(())
}
