//! Client session for the device control protocol.

use std::io;
use std::time::Duration;

use tvstress_core::gui::DeviceLink;
use tvstress_core::monkey::{DeviceRequest, DeviceResponse, ProtocolError, ResponseAssembler};
use tvstress_core::reply::Reply;

use crate::net::LineConn;

#[derive(Debug, thiserror::Error)]
pub enum DeviceError {
    /// Connection-level failure: refused, reset, closed mid-response,
    /// timed out. These are retried.
    #[error("device connection: {0}")]
    Transport(#[from] io::Error),
    /// The device answered with something that does not parse.
    #[error("device protocol: {0}")]
    Protocol(#[from] ProtocolError),
}

impl DeviceError {
    pub fn is_transport(&self) -> bool {
        matches!(self, DeviceError::Transport(_))
    }
}

#[derive(Debug)]
pub struct DeviceSession {
    conn: LineConn,
    endpoint: String,
}

impl DeviceSession {
    /// Opens the TCP connection without any protocol exchange.
    pub fn open(endpoint: &str, connect_timeout: Duration, io_timeout: Duration) -> Result<Self, DeviceError> {
        let conn = LineConn::open(endpoint, connect_timeout, Some(io_timeout))?;
        Ok(DeviceSession {
            conn,
            endpoint: endpoint.to_string(),
        })
    }

    /// Opens a connection and checks that `PING` is answered with `OK`.
    pub fn connect(endpoint: &str, connect_timeout: Duration, io_timeout: Duration) -> Result<Self, DeviceError> {
        let mut session = DeviceSession::open(endpoint, connect_timeout, io_timeout)?;
        match session.request(&DeviceRequest::Ping)? {
            DeviceResponse::Single(Reply::Ok) => Ok(session),
            other => Err(DeviceError::Transport(io::Error::new(
                io::ErrorKind::ConnectionRefused,
                format!("device did not accept the session: {}", other.encode().trim_end()),
            ))),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn request(&mut self, req: &DeviceRequest) -> Result<DeviceResponse, DeviceError> {
        self.conn.send(&req.to_string())?;
        let mut asm = ResponseAssembler::for_request(req);
        loop {
            let line = self.conn.recv()?;
            if let Some(resp) = asm.push_line(&line)? {
                return Ok(resp);
            }
        }
    }

    pub fn close(self) {
        let mut s = self;
        let _ = s.conn.send("QUIT");
        s.conn.shutdown();
    }
}

impl DeviceLink for DeviceSession {
    type Error = DeviceError;

    fn exchange(&mut self, req: &DeviceRequest) -> Result<DeviceResponse, DeviceError> {
        self.request(req)
    }
}
