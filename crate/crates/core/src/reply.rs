//! The single-line reply shared by the device and agent protocols.

use alloc::string::{String, ToString};
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Reply {
    Ok,
    OkPayload(String),
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed reply line: {0:?}")]
pub struct MalformedReply(pub String);

impl Reply {
    pub fn parse(line: &str) -> Result<Reply, MalformedReply> {
        if line == "OK" {
            Ok(Reply::Ok)
        } else if let Some(payload) = line.strip_prefix("OK:") {
            Ok(Reply::OkPayload(payload.to_string()))
        } else if let Some(message) = line.strip_prefix("ERROR:") {
            Ok(Reply::Error(message.to_string()))
        } else {
            Err(MalformedReply(line.to_string()))
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Reply::Error(_))
    }

    /// Payload text, empty for a bare `OK`.
    pub fn payload(&self) -> Option<&str> {
        match self {
            Reply::Ok => Some(""),
            Reply::OkPayload(p) => Some(p),
            Reply::Error(_) => None,
        }
    }
}

impl fmt::Display for Reply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reply::Ok => f.write_str("OK"),
            Reply::OkPayload(p) => write!(f, "OK:{p}"),
            Reply::Error(m) => write!(f, "ERROR:{m}"),
        }
    }
}

/// Payloads and messages must stay on one line.
pub fn is_single_line(text: &str) -> bool {
    !text.contains(['\n', '\r'])
}
