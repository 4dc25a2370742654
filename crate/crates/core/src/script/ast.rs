use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::gui::{Attribute, Condition, WaitLevel};
use crate::resource::{Percentage, ReleaseTarget, ResourceKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptAst {
    pub source_name: String,
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    /// Dense 0-based position in the script.
    pub index: usize,
    /// 1-based source line.
    pub line: usize,
    pub kind: StatementKind,
}

/// A string literal or a variable holding one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Str(String),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Str(String),
    Int(i64),
    /// Homogeneous list of strings or integers.
    List(Vec<Literal>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Str(String),
    Int(i64),
    List(Vec<Literal>),
    Property { var: String, prop: String },
    Index { list: String, index: Box<Expr> },
    Eq(Box<Expr>, Box<Expr>),
}


#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForeachSource {
    Var(String),
    List(Vec<Literal>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatementKind {
    Connect,
    StartActivity { activity: Operand },
    Press { key: String },
    ConsumeResource { resource: ResourceKind, percentage: Percentage },
    ReleaseResource { target: ReleaseTarget },
    QueryResource { resource: ResourceKind, into: String },
    Voice { text: Operand },
    VoiceNoisy { text: Operand, snr_db: i64 },
    WaitUi {
        level: WaitLevel,
        subject: String,
        condition: Condition,
        timeout_ms: u64,
        poll_ms: Option<u64>,
    },
    FocusedWindow { into: String },
    GetControl { window: Operand, control: Operand, into: String },
    GetAttribute { handle: String, attr: Attribute, into: String },
    Assert { condition: Expr },
    Sleep { millis: u64 },
    Let { name: String, value: Literal },
    Foreach { index: Option<String>, item: String, source: ForeachSource },
    End,
}

impl StatementKind {
    pub fn name(&self) -> &'static str {
        match self {
            StatementKind::Connect => "connect",
            StatementKind::StartActivity { .. } => "start_activity",
            StatementKind::Press { .. } => "press",
            StatementKind::ConsumeResource { .. } => "consume",
            StatementKind::ReleaseResource { .. } => "release",
            StatementKind::QueryResource { .. } => "query",
            StatementKind::Voice { .. } => "voice",
            StatementKind::VoiceNoisy { .. } => "voice_noisy",
            StatementKind::WaitUi { .. } => "wait_ui",
            StatementKind::FocusedWindow { .. } => "focused",
            StatementKind::GetControl { .. } => "get_control",
            StatementKind::GetAttribute { .. } => "get_attr",
            StatementKind::Assert { .. } => "assert",
            StatementKind::Sleep { .. } => "sleep",
            StatementKind::Let { .. } => "let",
            StatementKind::Foreach { .. } => "foreach",
            StatementKind::End => "end",
        }
    }
}

pub(crate) fn write_quoted(f: &mut impl Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Str(s) => write_quoted(f, s),
            Operand::Var(v) => f.write_str(v),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Str(s) => write_quoted(f, s),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::List(items) => write_list(f, items),
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Literal]) -> fmt::Result {
    f.write_char('[')?;
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    f.write_char(']')
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => f.write_str(v),
            Expr::Str(s) => write_quoted(f, s),
            Expr::Int(i) => write!(f, "{i}"),
            Expr::List(items) => write_list(f, items),
            Expr::Property { var, prop } => write!(f, "{var}.{prop}"),
            Expr::Index { list, index } => write!(f, "{list}[{index}]"),
            Expr::Eq(a, b) => write!(f, "{a} == {b}"),
        }
    }
}

impl fmt::Display for StatementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use StatementKind::*;
        match self {
            Connect | End => f.write_str(self.name()),
            StartActivity { activity } => write!(f, "start_activity {activity}"),
            Press { key } => write!(f, "press {key}"),
            ConsumeResource { resource, percentage } => write!(f, "consume {resource} {percentage}"),
            ReleaseResource { target } => match target {
                ReleaseTarget::All => f.write_str("release all"),
                ReleaseTarget::Kind(k) => write!(f, "release {k}"),
            },
            QueryResource { resource, into } => write!(f, "query {resource} -> {into}"),
            Voice { text } => write!(f, "voice {text}"),
            VoiceNoisy { text, snr_db } => write!(f, "voice_noisy {text} snr={snr_db}"),
            WaitUi { level, subject, condition, timeout_ms, poll_ms } => {
                write!(f, "wait_ui {} ", level.keyword())?;
                write_quoted(f, subject)?;
                write!(f, " {} timeout={timeout_ms}", condition.keyword())?;
                if let Some(p) = poll_ms {
                    write!(f, " poll={p}")?;
                }
                Ok(())
            }
            FocusedWindow { into } => write!(f, "focused -> {into}"),
            GetControl { window, control, into } => write!(f, "get_control {window} {control} -> {into}"),
            GetAttribute { handle, attr, into } => write!(f, "get_attr {handle}.{} -> {into}", attr.keyword()),
            Assert { condition } => write!(f, "assert {condition}"),
            Sleep { millis } => write!(f, "sleep {millis}"),
            Let { name, value } => write!(f, "let {name} = {value}"),
            Foreach { index, item, source } => {
                f.write_str("foreach ")?;
                if let Some(i) = index {
                    write!(f, "{i}, ")?;
                }
                write!(f, "{item} in ")?;
                match source {
                    ForeachSource::Var(v) => f.write_str(v),
                    ForeachSource::List(items) => write_list(f, items),
                }
            }
        }
    }
}

/// Canonical source text; `foreach` bodies are indented two spaces.
impl fmt::Display for ScriptAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut depth = 0usize;
        for stmt in &self.statements {
            if matches!(stmt.kind, StatementKind::End) {
                depth = depth.saturating_sub(1);
            }
            for _ in 0..depth {
                f.write_str("  ")?;
            }
            writeln!(f, "{}", stmt.kind)?;
            if matches!(stmt.kind, StatementKind::Foreach { .. }) {
                depth += 1;
            }
        }
        Ok(())
    }
}
