use std::io;
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use tvstress_core::agent_proto::AgentRequest;
use tvstress_core::reply::Reply;
use tvstress_core::ReleaseTarget;

use super::{Agent, AgentConfig, AgentError};
use crate::net::{self, LineConn};

/// A running agent service. Commands from all clients are serialized on
/// one [`Agent`].
#[derive(Debug)]
pub struct AgentServer {
    addr: SocketAddr,
    agent: Arc<Mutex<Agent>>,
    shutdown: Arc<AtomicBool>,
    conns: Arc<Mutex<Vec<TcpStream>>>,
    thread: Option<JoinHandle<()>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind {endpoint}: {source}")]
    Bind { endpoint: String, source: io::Error },
    #[error(transparent)]
    Agent(#[from] AgentError),
}

impl AgentServer {
    pub fn start(config: AgentConfig) -> Result<AgentServer, ServeError> {
        let endpoint = config.listen.clone();
        let bind_err = |source| ServeError::Bind {
            endpoint: endpoint.clone(),
            source,
        };
        let listener = net::resolve(&endpoint)
            .and_then(TcpListener::bind)
            .map_err(bind_err)?;
        let addr = listener.local_addr().map_err(bind_err)?;
        let agent = Arc::new(Mutex::new(Agent::new(config)?));
        let shutdown = Arc::new(AtomicBool::new(false));
        let conns = Arc::new(Mutex::new(Vec::new()));
        let (a, sd, cs) = (agent.clone(), shutdown.clone(), conns.clone());
        let thread = std::thread::Builder::new()
            .name("agent-accept".into())
            .spawn(move || accept_loop(listener, a, sd, cs))
            .expect("spawn agent accept loop");
        Ok(AgentServer {
            addr,
            agent,
            shutdown,
            conns,
            thread: Some(thread),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn agent(&self) -> Arc<Mutex<Agent>> {
        self.agent.clone()
    }

    pub fn is_running(&self) -> bool {
        !self.shutdown.load(Ordering::Acquire)
    }

    /// Stops accepting, drops every client connection and releases all
    /// loads.
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
        self.agent.lock().unwrap().release(ReleaseTarget::All);
    }
}

impl Drop for AgentServer {
    fn drop(&mut self) {
        self.stop();
    }
}

fn accept_loop(listener: TcpListener, agent: Arc<Mutex<Agent>>, shutdown: Arc<AtomicBool>, conns: Arc<Mutex<Vec<TcpStream>>>) {
    for stream in listener.incoming() {
        if shutdown.load(Ordering::Acquire) {
            return;
        }
        let Ok(stream) = stream else { continue };
        let _ = stream.set_nodelay(true);
        if let Ok(c) = stream.try_clone() {
            let mut list = conns.lock().unwrap();
            list.retain(|s| s.peer_addr().is_ok());
            list.push(c);
        }
        let (agent, shutdown) = (agent.clone(), shutdown.clone());
        let _ = std::thread::Builder::new()
            .name("agent-conn".into())
            .spawn(move || serve_client(stream, agent, shutdown));
    }
}

fn serve_client(stream: TcpStream, agent: Arc<Mutex<Agent>>, shutdown: Arc<AtomicBool>) -> io::Result<()> {
    let mut conn = LineConn::new(stream)?;
    while let Some(line) = conn.recv_opt()? {
        let req = match AgentRequest::parse(&line) {
            Ok(r) => r,
            Err(e) => {
                conn.send(&Reply::Error(e.to_string()).to_string())?;
                continue;
            }
        };
        let reply = {
            let mut a = agent.lock().unwrap();
            if shutdown.load(Ordering::Acquire) {
                break;
            }
            a.handle(&req)
        };
        conn.send(&reply.to_string())?;
        if req == AgentRequest::Quit {
            break;
        }
    }
    conn.shutdown();
    Ok(())
}
