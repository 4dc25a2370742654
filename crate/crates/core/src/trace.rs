//! Execution traces: the ordered log of interface events a script run
//! issued, and the replay of resource targets from such a log.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::resource::{LoadTarget, Percentage, ReleaseTarget, ResourceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interface {
    Device,
    Agent,
    Voice,
}

impl Interface {
    pub fn name(self) -> &'static str {
        match self {
            Interface::Device => "device",
            Interface::Agent => "agent",
            Interface::Voice => "voice",
        }
    }
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pending,
    Ok(String),
    Error(String),
}

impl Outcome {
    pub fn is_error(&self) -> bool {
        matches!(self, Outcome::Error(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub seq: u64,
    pub interface: Interface,
    /// Wire-level command name, e.g. `CONSUME`.
    pub command: String,
    pub args: Vec<String>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("no event with seq {0}")]
    UnknownSeq(u64),
    #[error("event {0} already resolved")]
    AlreadyResolved(u64),
    #[error("an outcome cannot be reset to pending")]
    BackToPending,
}

impl Event {
    pub fn new(seq: u64, interface: Interface, command: impl Into<String>, args: Vec<String>) -> Self {
        Event {
            seq,
            interface,
            command: command.into(),
            args,
            outcome: Outcome::Pending,
        }
    }

    /// Moves a pending event to its final outcome.
    pub fn resolve(&mut self, outcome: Outcome) -> Result<(), TraceError> {
        if outcome == Outcome::Pending {
            return Err(TraceError::BackToPending);
        }
        if self.outcome != Outcome::Pending {
            return Err(TraceError::AlreadyResolved(self.seq));
        }
        self.outcome = outcome;
        Ok(())
    }

    /// One tab-separated export line: `seq interface command args outcome`.
    pub fn to_tsv_line(&self) -> String {
        let mut args = String::new();
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                args.push(' ');
            }
            escape_into(&mut args, a);
        }
        let mut outcome = String::new();
        match &self.outcome {
            Outcome::Pending => outcome.push_str("PENDING"),
            Outcome::Ok(p) => {
                outcome.push_str("OK:");
                escape_into(&mut outcome, p);
            }
            Outcome::Error(m) => {
                outcome.push_str("ERROR:");
                escape_into(&mut outcome, m);
            }
        }
        alloc::format!("{}\t{}\t{}\t{}\t{}", self.seq, self.interface, self.command, args, outcome)
    }
}

fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            ' ' => out.push_str("\\s"),
            c => out.push(c),
        }
    }
}

/// Ordered event log of one run. Sequence numbers are dense from 0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExecutionTrace {
    pub script_name: String,
    pub events: Vec<Event>,
    /// Wall-clock milliseconds since the Unix epoch.
    pub started_at_ms: u64,
    pub ended_at_ms: u64,
}

impl ExecutionTrace {
    pub fn new(script_name: impl Into<String>, started_at_ms: u64) -> Self {
        ExecutionTrace {
            script_name: script_name.into(),
            events: Vec::new(),
            started_at_ms,
            ended_at_ms: started_at_ms,
        }
    }

    /// Appends a pending event and returns its seq.
    pub fn issue(&mut self, interface: Interface, command: impl Into<String>, args: Vec<String>) -> u64 {
        let seq = self.events.len() as u64;
        self.events.push(Event::new(seq, interface, command, args));
        seq
    }

    pub fn resolve(&mut self, seq: u64, outcome: Outcome) -> Result<(), TraceError> {
        self.events
            .get_mut(seq as usize)
            .ok_or(TraceError::UnknownSeq(seq))?
            .resolve(outcome)
    }

    pub fn get(&self, seq: u64) -> Option<&Event> {
        self.events.get(seq as usize)
    }

    pub fn last_seq(&self) -> Option<u64> {
        self.events.last().map(|e| e.seq)
    }

    /// Whether seqs are strictly increasing and gapless from 0.
    pub fn is_well_formed(&self) -> bool {
        self.events.iter().enumerate().all(|(i, e)| e.seq == i as u64)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_tsv_line());
            out.push('\n');
        }
        out
    }
}

/// The agent event that re-establishes `target`.
pub fn consume_event_parts(target: &LoadTarget) -> (&'static str, Vec<String>) {
    ("CONSUME", alloc::vec![target.kind.wire_token().to_string(), target.percentage.to_string()])
}

/// Resource targets still in force at the end of `events`: per kind, the
/// latest `CONSUME` not superseded by a later `RELEASE` of that kind,
/// `RELEASE ALL`, or `RESET`. Only agent events whose outcome is not an
/// error count. Targets are ordered by when they were (re)established after
/// their last release; a superseding `CONSUME` keeps its kind's position.
pub fn replay_resource_state(events: &[Event]) -> Vec<LoadTarget> {
    let mut active: Vec<LoadTarget> = Vec::new();
    for e in events {
        if e.interface != Interface::Agent || e.outcome.is_error() {
            continue;
        }
        match (e.command.as_str(), e.args.as_slice()) {
            ("CONSUME", [kind, pct]) => {
                let (Some(kind), Some(p)) = (
                    ResourceKind::from_wire_token(kind),
                    pct.parse::<i64>().ok().and_then(Percentage::new),
                ) else {
                    continue;
                };
                match active.iter_mut().find(|t| t.kind == kind) {
                    Some(t) => t.percentage = p,
                    None => active.push(LoadTarget::active(kind, p)),
                }
            }
            ("RELEASE", [target]) => {
                if let Some(target) = ReleaseTarget::from_wire_token(target) {
                    active.retain(|t| !target.covers(t.kind));
                }
            }
            ("RESET", []) => active.clear(),
            _ => {}
        }
    }
    active
}
