//! Agent control protocol and the data-service framing used for network
//! load.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::load::CalibrationResult;
use crate::resource::{LoadTarget, Percentage, ReleaseTarget, ResourceKind};
use crate::value::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryTarget {
    Cpu,
    Memory,
    Network,
    Storage,
    Os,
    /// Active load targets, `KIND=pct` separated by spaces.
    Targets,
}

impl QueryTarget {
    pub const ALL: [QueryTarget; 6] = [
        QueryTarget::Cpu,
        QueryTarget::Memory,
        QueryTarget::Network,
        QueryTarget::Storage,
        QueryTarget::Os,
        QueryTarget::Targets,
    ];

    pub fn wire_token(self) -> &'static str {
        match self {
            QueryTarget::Cpu => "CPU",
            QueryTarget::Memory => "MEM",
            QueryTarget::Network => "NET",
            QueryTarget::Storage => "STORAGE",
            QueryTarget::Os => "OS",
            QueryTarget::Targets => "TARGETS",
        }
    }

    pub fn for_resource(kind: ResourceKind) -> QueryTarget {
        match kind {
            ResourceKind::Cpu => QueryTarget::Cpu,
            ResourceKind::Memory => QueryTarget::Memory,
            ResourceKind::Network => QueryTarget::Network,
            ResourceKind::StorageBandwidth | ResourceKind::StorageSpace => QueryTarget::Storage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CalibrationKind {
    Network,
    StorageBandwidth,
}

impl CalibrationKind {
    pub fn wire_token(self) -> &'static str {
        match self {
            CalibrationKind::Network => "NET",
            CalibrationKind::StorageBandwidth => "STORBW",
        }
    }

    pub fn from_wire_token(t: &str) -> Option<Self> {
        match t {
            "NET" => Some(CalibrationKind::Network),
            "STORBW" => Some(CalibrationKind::StorageBandwidth),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentRequest {
    Ping,
    Consume { kind: ResourceKind, percentage: Percentage },
    Release(ReleaseTarget),
    Query(QueryTarget),
    Calibrate(CalibrationKind),
    Reset,
    Quit,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentProtoError {
    #[error("unknown agent command {0:?}")]
    UnknownCommand(String),
    #[error("bad arguments for {command}: {detail}")]
    BadArguments { command: &'static str, detail: String },
    #[error("malformed payload {0:?}")]
    BadPayload(String),
}

impl AgentRequest {
    pub fn command_name(&self) -> &'static str {
        match self {
            AgentRequest::Ping => "PING",
            AgentRequest::Consume { .. } => "CONSUME",
            AgentRequest::Release(_) => "RELEASE",
            AgentRequest::Query(_) => "QUERY",
            AgentRequest::Calibrate(_) => "CALIBRATE",
            AgentRequest::Reset => "RESET",
            AgentRequest::Quit => "QUIT",
        }
    }

    pub fn args(&self) -> Vec<String> {
        match self {
            AgentRequest::Consume { kind, percentage } => {
                alloc::vec![kind.wire_token().to_string(), percentage.to_string()]
            }
            AgentRequest::Release(t) => alloc::vec![t.wire_token().to_string()],
            AgentRequest::Query(q) => alloc::vec![q.wire_token().to_string()],
            AgentRequest::Calibrate(k) => alloc::vec![k.wire_token().to_string()],
            _ => Vec::new(),
        }
    }

    pub fn consume(target: &LoadTarget) -> AgentRequest {
        AgentRequest::Consume {
            kind: target.kind,
            percentage: target.percentage,
        }
    }

    pub fn parse(line: &str) -> Result<AgentRequest, AgentProtoError> {
        let mut parts = line.split(' ');
        let command = parts.next().unwrap_or("");
        let args: Vec<&str> = parts.collect();
        let bad = |command: &'static str, detail: &str| AgentProtoError::BadArguments {
            command,
            detail: detail.to_string(),
        };
        match (command, args.as_slice()) {
            ("PING", []) => Ok(AgentRequest::Ping),
            ("RESET", []) => Ok(AgentRequest::Reset),
            ("QUIT", []) => Ok(AgentRequest::Quit),
            ("CONSUME", [kind, pct]) => {
                let kind = ResourceKind::from_wire_token(kind).ok_or_else(|| bad("CONSUME", "unknown resource"))?;
                let canonical = pct.parse::<u8>().ok().filter(|v| v.to_string() == *pct);
                let percentage = canonical
                    .and_then(|v| Percentage::new(v as i64))
                    .ok_or_else(|| bad("CONSUME", "percentage must be an integer in 0..100"))?;
                Ok(AgentRequest::Consume { kind, percentage })
            }
            ("RELEASE", [t]) => ReleaseTarget::from_wire_token(t)
                .map(AgentRequest::Release)
                .ok_or_else(|| bad("RELEASE", "unknown resource")),
            ("QUERY", [t]) => QueryTarget::ALL
                .into_iter()
                .find(|q| q.wire_token() == *t)
                .map(AgentRequest::Query)
                .ok_or_else(|| bad("QUERY", "unknown query target")),
            ("CALIBRATE", [k]) => CalibrationKind::from_wire_token(k)
                .map(AgentRequest::Calibrate)
                .ok_or_else(|| bad("CALIBRATE", "expected NET or STORBW")),
            ("PING" | "RESET" | "QUIT" | "CONSUME" | "RELEASE" | "QUERY" | "CALIBRATE", _) => Err(bad(
                match command {
                    "PING" => "PING",
                    "RESET" => "RESET",
                    "QUIT" => "QUIT",
                    "CONSUME" => "CONSUME",
                    "RELEASE" => "RELEASE",
                    "QUERY" => "QUERY",
                    _ => "CALIBRATE",
                },
                "wrong number of arguments",
            )),
            _ => Err(AgentProtoError::UnknownCommand(command.to_string())),
        }
    }
}

impl fmt::Display for AgentRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.command_name())?;
        for a in self.args() {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

pub fn format_cpu(pct: f64) -> String {
    format!("{pct:.1}")
}

pub fn format_pair(a: u64, b: u64) -> String {
    format!("{a} {b}")
}

fn parse_pair(payload: &str) -> Result<(u64, u64), AgentProtoError> {
    let bad = || AgentProtoError::BadPayload(payload.to_string());
    let (a, b) = payload.split_once(' ').ok_or_else(bad)?;
    Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
}

pub fn format_targets(targets: &[LoadTarget]) -> String {
    let parts: Vec<String> = targets.iter().map(|t| t.to_string()).collect();
    parts.join(" ")
}

pub fn parse_targets(payload: &str) -> Result<Vec<LoadTarget>, AgentProtoError> {
    let bad = || AgentProtoError::BadPayload(payload.to_string());
    payload
        .split(' ')
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (k, p) = item.split_once('=').ok_or_else(bad)?;
            let kind = ResourceKind::from_wire_token(k).ok_or_else(bad)?;
            let p = p.parse::<i64>().ok().and_then(Percentage::new).ok_or_else(bad)?;
            Ok(LoadTarget::active(kind, p))
        })
        .collect()
}

pub fn format_calibration(r: &CalibrationResult) -> String {
    format!("{} {}", r.max_workers, r.saturated_bytes_per_sec)
}

pub fn parse_calibration(payload: &str) -> Result<CalibrationResult, AgentProtoError> {
    let (max, bps) = parse_pair(payload)?;
    let max_workers = u32::try_from(max)
        .ok()
        .filter(|m| *m >= 1)
        .ok_or_else(|| AgentProtoError::BadPayload(payload.to_string()))?;
    Ok(CalibrationResult {
        max_workers,
        saturated_bytes_per_sec: bps,
    })
}

/// Turns a `QUERY` reply payload into the snapshot value scripts see.
pub fn snapshot_from_payload(kind: ResourceKind, payload: &str) -> Result<Snapshot, AgentProtoError> {
    let mut fields = BTreeMap::new();
    match QueryTarget::for_resource(kind) {
        QueryTarget::Cpu => {
            let pct: f64 = payload
                .parse()
                .map_err(|_| AgentProtoError::BadPayload(payload.to_string()))?;
            fields.insert("pct".to_string(), libm::round(pct) as i64);
        }
        target => {
            let (a, b) = parse_pair(payload)?;
            let names = match target {
                QueryTarget::Memory => ["used", "total"],
                QueryTarget::Network => ["up", "down"],
                _ => ["total", "free"],
            };
            fields.insert(names[0].to_string(), a as i64);
            fields.insert(names[1].to_string(), b as i64);
        }
    }
    Ok(Snapshot {
        kind,
        fields,
        raw: payload.to_string(),
    })
}

/// Data-service request header: `U <n>` uploads n bytes, `D <n>` downloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataRequest {
    Upload(u64),
    Download(u64),
}

impl DataRequest {
    pub fn parse(line: &str) -> Option<DataRequest> {
        let (op, n) = line.split_once(' ')?;
        let n: u64 = n.parse().ok().filter(|v: &u64| v.to_string() == n)?;
        match op {
            "U" => Some(DataRequest::Upload(n)),
            "D" => Some(DataRequest::Download(n)),
            _ => None,
        }
    }

    pub fn len(&self) -> u64 {
        match self {
            DataRequest::Upload(n) | DataRequest::Download(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for DataRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataRequest::Upload(n) => write!(f, "U {n}"),
            DataRequest::Download(n) => write!(f, "D {n}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consume_line() {
        let r = AgentRequest::parse("CONSUME CPU 90").unwrap();
        assert_eq!(r.to_string(), "CONSUME CPU 90");
        assert!(AgentRequest::parse("CONSUME CPU 101").is_err());
        assert!(AgentRequest::parse("CONSUME CPU 090").is_err());
        assert!(AgentRequest::parse("CONSUME GPU 1").is_err());
        assert!(AgentRequest::parse("PING now").is_err());
        assert!(matches!(AgentRequest::parse("FLY"), Err(AgentProtoError::UnknownCommand(_))));
    }

    #[test]
    fn targets_payload() {
        let t = alloc::vec![
            LoadTarget::active(ResourceKind::Cpu, Percentage::new(90).unwrap()),
            LoadTarget::active(ResourceKind::Network, Percentage::new(40).unwrap()),
        ];
        assert_eq!(format_targets(&t), "CPU=90 NET=40");
        assert_eq!(parse_targets("CPU=90 NET=40").unwrap(), t);
        assert!(parse_targets("").unwrap().is_empty());
    }

    #[test]
    fn snapshot_fields_from_payload() {
        let s = snapshot_from_payload(ResourceKind::Memory, "1024 4096").unwrap();
        assert_eq!(s.fields["used"], 1024);
        let s = snapshot_from_payload(ResourceKind::Cpu, "89.6").unwrap();
        assert_eq!(s.fields["pct"], 90);
    }

    #[test]
    fn data_headers() {
        assert_eq!(DataRequest::parse("U 65536"), Some(DataRequest::Upload(65536)));
        assert_eq!(DataRequest::Download(7).to_string(), "D 7");
        assert_eq!(DataRequest::parse("X 1"), None);
        assert_eq!(DataRequest::parse("U -1"), None);
    }
}
