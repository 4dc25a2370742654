use std::io;
use std::time::Duration;

use tvstress_core::agent_proto::AgentRequest;
use tvstress_core::reply::{MalformedReply, Reply};

use crate::net::LineConn;

/// Calibration runs many one-second windows before answering.
const CALIBRATE_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, thiserror::Error)]
pub enum AgentClientError {
    #[error("agent connection: {0}")]
    Transport(#[from] io::Error),
    #[error("agent protocol: {0}")]
    Protocol(#[from] MalformedReply),
}

impl AgentClientError {
    pub fn is_transport(&self) -> bool {
        matches!(self, AgentClientError::Transport(_))
    }
}

#[derive(Debug)]
pub struct AgentClient {
    conn: LineConn,
    io_timeout: Duration,
}

impl AgentClient {
    /// Opens the TCP connection without any protocol exchange.
    pub fn open(endpoint: &str, connect_timeout: Duration, io_timeout: Duration) -> Result<Self, AgentClientError> {
        let conn = LineConn::open(endpoint, connect_timeout, Some(io_timeout))?;
        Ok(AgentClient { conn, io_timeout })
    }

    /// Connects and checks the agent answers `PING`.
    pub fn connect(endpoint: &str, connect_timeout: Duration, io_timeout: Duration) -> Result<Self, AgentClientError> {
        let mut c = AgentClient::open(endpoint, connect_timeout, io_timeout)?;
        match c.request(&AgentRequest::Ping)? {
            Reply::Ok => Ok(c),
            other => Err(AgentClientError::Transport(io::Error::new(
                io::ErrorKind::ConnectionRefused,
                format!("agent did not accept the session: {other}"),
            ))),
        }
    }

    pub fn request(&mut self, req: &AgentRequest) -> Result<Reply, AgentClientError> {
        let slow = matches!(req, AgentRequest::Calibrate(_) | AgentRequest::Consume { .. });
        if slow {
            self.conn.set_read_timeout(Some(CALIBRATE_TIMEOUT))?;
        }
        self.conn.send(&req.to_string())?;
        let line = self.conn.recv();
        if slow {
            self.conn.set_read_timeout(Some(self.io_timeout))?;
        }
        Ok(Reply::parse(&line?)?)
    }

    pub fn close(mut self) {
        let _ = self.conn.send("QUIT");
        self.conn.shutdown();
    }
}
