//! Device control protocol: LF-terminated UTF-8 request lines, single-line
//! replies, and multi-line payloads closed by a lone `END`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::gui::{format_hash, parse_hash, Attribute};
use crate::reply::{MalformedReply, Reply};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keycode {
    Up,
    Down,
    Left,
    Right,
    Select,
    Back,
    Home,
}

impl Keycode {
    pub const ALL: [Keycode; 7] = [
        Keycode::Up,
        Keycode::Down,
        Keycode::Left,
        Keycode::Right,
        Keycode::Select,
        Keycode::Back,
        Keycode::Home,
    ];

    pub fn wire_name(self) -> &'static str {
        match self {
            Keycode::Up => "KEYCODE_UP",
            Keycode::Down => "KEYCODE_DOWN",
            Keycode::Left => "KEYCODE_LEFT",
            Keycode::Right => "KEYCODE_RIGHT",
            Keycode::Select => "KEYCODE_SELECT",
            Keycode::Back => "KEYCODE_BACK",
            Keycode::Home => "KEYCODE_HOME",
        }
    }

    pub fn from_wire_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.wire_name() == name)
    }

    /// Scripts may write `BACK` or `KEYCODE_BACK`, in any case.
    pub fn from_script_name(name: &str) -> Option<Self> {
        let bare = if name.len() > 8 && name[..8].eq_ignore_ascii_case("KEYCODE_") {
            &name[8..]
        } else {
            name
        };
        Self::ALL
            .into_iter()
            .find(|k| k.wire_name()[8..].eq_ignore_ascii_case(bare))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeviceRequest {
    Ping,
    GetFocus,
    ListWindows,
    /// Tree dump of one window, optionally narrowed to one control or one
    /// property of that control.
    DumpQ {
        window: u32,
        control: Option<String>,
        attr: Option<Attribute>,
    },
    Press(Keycode),
    StartActivity(String),
    Quit,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("unknown command {0:?}")]
    UnknownCommand(String),
    #[error("unknown keycode {0:?}")]
    UnknownKeycode(String),
    #[error("bad arguments for {command}: {detail}")]
    BadArguments { command: &'static str, detail: String },
    #[error(transparent)]
    MalformedReply(#[from] MalformedReply),
}

impl DeviceRequest {
    pub fn command_name(&self) -> &'static str {
        match self {
            DeviceRequest::Ping => "PING",
            DeviceRequest::GetFocus => "GETFOCUS",
            DeviceRequest::ListWindows => "LISTWINDOWS",
            DeviceRequest::DumpQ { .. } => "DUMPQ",
            DeviceRequest::Press(_) => "PRESS",
            DeviceRequest::StartActivity(_) => "STARTACTIVITY",
            DeviceRequest::Quit => "QUIT",
        }
    }

    /// Arguments as they appear on the wire after the command name.
    pub fn args(&self) -> Vec<String> {
        match self {
            DeviceRequest::DumpQ { window, control, attr } => {
                let mut v = alloc::vec![format_hash(*window)];
                v.extend(control.iter().cloned());
                v.extend(attr.iter().map(|a| a.keyword().to_string()));
                v
            }
            DeviceRequest::Press(k) => alloc::vec![k.wire_name().to_string()],
            DeviceRequest::StartActivity(n) => alloc::vec![n.clone()],
            _ => Vec::new(),
        }
    }

    /// Whether a successful reply is a multi-line payload closed by `END`.
    pub fn expects_lines(&self) -> bool {
        matches!(
            self,
            DeviceRequest::ListWindows | DeviceRequest::DumpQ { attr: None, .. }
        )
    }

    pub fn parse(line: &str) -> Result<DeviceRequest, ProtocolError> {
        let mut parts = line.split(' ');
        let command = parts.next().unwrap_or("");
        let args: Vec<&str> = parts.collect();
        let bad = |command: &'static str, detail: &str| ProtocolError::BadArguments {
            command,
            detail: detail.to_string(),
        };
        let no_args = |req: DeviceRequest| {
            if args.is_empty() {
                Ok(req)
            } else {
                Err(bad(req.command_name(), "takes no arguments"))
            }
        };
        match command {
            "PING" => no_args(DeviceRequest::Ping),
            "GETFOCUS" => no_args(DeviceRequest::GetFocus),
            "LISTWINDOWS" => no_args(DeviceRequest::ListWindows),
            "QUIT" => no_args(DeviceRequest::Quit),
            // DUMP is accepted as an alias of DUMPQ.
            "DUMPQ" | "DUMP" => {
                let (hash, control, attr) = match args.as_slice() {
                    [h] => (*h, None, None),
                    [h, c] => (*h, Some(*c), None),
                    [h, c, a] => (*h, Some(*c), Some(*a)),
                    _ => return Err(bad("DUMPQ", "expected <hash8> [<controlId> [<attr>]]")),
                };
                let window = parse_hash(hash).ok_or_else(|| bad("DUMPQ", "window hash must be 8 hex digits"))?;
                if control.is_some_and(|c| c.is_empty()) {
                    return Err(bad("DUMPQ", "empty control id"));
                }
                let attr = match attr {
                    Some(a) => Some(Attribute::from_keyword(a).ok_or_else(|| bad("DUMPQ", "unknown attribute"))?),
                    None => None,
                };
                Ok(DeviceRequest::DumpQ {
                    window,
                    control: control.map(str::to_string),
                    attr,
                })
            }
            "PRESS" => match args.as_slice() {
                [k] => Keycode::from_wire_name(k)
                    .map(DeviceRequest::Press)
                    .ok_or_else(|| ProtocolError::UnknownKeycode(k.to_string())),
                _ => Err(bad("PRESS", "expected one keycode")),
            },
            "STARTACTIVITY" => match args.as_slice() {
                [name] if !name.is_empty() => Ok(DeviceRequest::StartActivity(name.to_string())),
                _ => Err(bad("STARTACTIVITY", "expected one activity name")),
            },
            other => Err(ProtocolError::UnknownCommand(other.to_string())),
        }
    }
}

impl fmt::Display for DeviceRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.command_name())?;
        for a in self.args() {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeviceResponse {
    Single(Reply),
    Lines(Vec<String>),
}

impl DeviceResponse {
    /// Wire bytes, every line LF-terminated.
    pub fn encode(&self) -> String {
        match self {
            DeviceResponse::Single(r) => format!("{r}\n"),
            DeviceResponse::Lines(lines) => {
                let mut out = String::new();
                for l in lines {
                    out.push_str(l);
                    out.push('\n');
                }
                out.push_str("END\n");
                out
            }
        }
    }

    pub fn encoded_len(&self) -> usize {
        match self {
            DeviceResponse::Single(r) => match r {
                Reply::Ok => 3,
                Reply::OkPayload(p) => 4 + p.len(),
                Reply::Error(m) => 7 + m.len(),
            },
            DeviceResponse::Lines(lines) => lines.iter().map(|l| l.len() + 1).sum::<usize>() + 4,
        }
    }
}

/// Collects reply lines until one full response is available.
#[derive(Debug)]
pub struct ResponseAssembler {
    multi: bool,
    lines: Vec<String>,
}

impl ResponseAssembler {
    pub fn for_request(req: &DeviceRequest) -> Self {
        ResponseAssembler {
            multi: req.expects_lines(),
            lines: Vec::new(),
        }
    }

    pub fn push_line(&mut self, line: &str) -> Result<Option<DeviceResponse>, ProtocolError> {
        if !self.multi {
            return Ok(Some(DeviceResponse::Single(Reply::parse(line)?)));
        }
        if self.lines.is_empty() && line.starts_with("ERROR:") {
            return Ok(Some(DeviceResponse::Single(Reply::parse(line)?)));
        }
        if line == "END" {
            return Ok(Some(DeviceResponse::Lines(core::mem::take(&mut self.lines))));
        }
        self.lines.push(line.to_string());
        Ok(None)
    }
}
