//! Network load against the data service. Even-indexed workers upload,
//! odd-indexed workers download, 64 KiB per transfer.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use tvstress_core::agent_proto::DataRequest;
use tvstress_core::load::{WorkerRole, TRANSFER_CHUNK};

use super::counters::Counters;
use super::stop::StopSignal;
use crate::net;

const CONNECT_TIMEOUT: Duration = Duration::from_secs(2);
const RECONNECT_PAUSE: Duration = Duration::from_millis(100);

#[derive(Debug)]
pub struct NetLoad {
    stop: Arc<StopSignal>,
    threads: Vec<JoinHandle<()>>,
    streams: Arc<Mutex<Vec<TcpStream>>>,
    roles: Vec<WorkerRole>,
}

fn open(endpoint: &str, streams: &Mutex<Vec<TcpStream>>) -> io::Result<TcpStream> {
    let s = net::connect(endpoint, CONNECT_TIMEOUT)?;
    s.set_read_timeout(Some(Duration::from_secs(5)))?;
    streams.lock().unwrap().push(s.try_clone()?);
    Ok(s)
}

impl NetLoad {
    /// Connects every worker before returning, so an unreachable service
    /// is reported to the caller.
    pub fn start(endpoint: &str, workers: u32, counters: Arc<Counters>) -> io::Result<NetLoad> {
        let stop = Arc::new(StopSignal::new());
        let streams = Arc::new(Mutex::new(Vec::new()));
        let mut conns = Vec::new();
        for _ in 0..workers {
            match open(endpoint, &streams) {
                Ok(s) => conns.push(s),
                Err(e) => {
                    for s in streams.lock().unwrap().iter() {
                        let _ = s.shutdown(Shutdown::Both);
                    }
                    return Err(e);
                }
            }
        }
        let mut roles = Vec::new();
        let mut threads = Vec::new();
        for (i, conn) in conns.into_iter().enumerate() {
            let role = WorkerRole::for_index(i as u32);
            roles.push(role);
            let (stop, streams, counters) = (stop.clone(), streams.clone(), counters.clone());
            let endpoint = endpoint.to_string();
            threads.push(
                std::thread::Builder::new()
                    .name(format!("net-load-{i}"))
                    .spawn(move || worker(conn, &endpoint, role, &stop, &streams, &counters))?,
            );
        }
        Ok(NetLoad {
            stop,
            threads,
            streams,
            roles,
        })
    }

    pub fn roles(&self) -> &[WorkerRole] {
        &self.roles
    }

    pub fn workers(&self) -> usize {
        self.threads.len()
    }

    pub fn stop(mut self) {
        self.stop.raise();
        for s in self.streams.lock().unwrap().iter() {
            let _ = s.shutdown(Shutdown::Both);
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

fn worker(
    mut conn: TcpStream,
    endpoint: &str,
    role: WorkerRole,
    stop: &StopSignal,
    streams: &Mutex<Vec<TcpStream>>,
    counters: &Counters,
) {
    loop {
        let _ = transfer_loop(&conn, role, stop, counters);
        if stop.is_raised() || stop.sleep(RECONNECT_PAUSE) {
            return;
        }
        match open(endpoint, streams) {
            Ok(s) => conn = s,
            Err(_) => continue,
        }
    }
}

fn transfer_loop(conn: &TcpStream, role: WorkerRole, stop: &StopSignal, counters: &Counters) -> io::Result<()> {
    let mut reader = BufReader::new(conn.try_clone()?);
    let mut writer = conn.try_clone()?;
    let mut buf = vec![0x77u8; TRANSFER_CHUNK];
    let n = TRANSFER_CHUNK as u64;
    while !stop.is_raised() {
        match role {
            WorkerRole::Sender => {
                let mut msg = format!("{}\n", DataRequest::Upload(n)).into_bytes();
                msg.extend_from_slice(&buf);
                writer.write_all(&msg)?;
                let mut ack = String::new();
                reader.read_line(&mut ack)?;
                if ack != "OK\n" {
                    return Err(io::Error::new(io::ErrorKind::InvalidData, "bad upload ack"));
                }
                Counters::add(&counters.net_up_bytes, n);
            }
            WorkerRole::Receiver => {
                writer.write_all(format!("{}\n", DataRequest::Download(n)).as_bytes())?;
                reader.read_exact(&mut buf)?;
                Counters::add(&counters.net_down_bytes, n);
            }
        }
    }
    Ok(())
}
