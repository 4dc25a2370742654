//! Runtime values and expression evaluation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::gui::{format_hash, Attribute, ControlHandle, WindowHandle};
use crate::resource::ResourceKind;
use crate::script::{Expr, Literal};

/// A resource reading returned by a `query` statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub kind: ResourceKind,
    /// Named integer fields, see [`snapshot_fields`].
    pub fields: BTreeMap<String, i64>,
    /// Raw reply payload.
    pub raw: String,
}

/// Integer properties a snapshot of `kind` exposes to scripts.
pub fn snapshot_fields(kind: ResourceKind) -> &'static [&'static str] {
    match kind {
        ResourceKind::Cpu => &["pct"],
        ResourceKind::Memory => &["used", "total"],
        ResourceKind::Network => &["up", "down"],
        ResourceKind::StorageBandwidth | ResourceKind::StorageSpace => &["total", "free"],
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Str(String),
    Int(i64),
    List(Vec<Value>),
    Window(WindowHandle),
    Control(ControlHandle),
    Snapshot(Snapshot),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Str(_) => "string",
            Value::Int(_) => "integer",
            Value::List(_) => "list",
            Value::Window(_) => "window handle",
            Value::Control(_) => "control handle",
            Value::Snapshot(_) => "resource snapshot",
        }
    }

    pub fn from_literal(lit: &Literal) -> Value {
        match lit {
            Literal::Str(s) => Value::Str(s.clone()),
            Literal::Int(i) => Value::Int(*i),
            Literal::List(items) => Value::List(items.iter().map(Value::from_literal).collect()),
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_truthy(&self) -> bool {
        matches!(self, Value::Int(i) if *i != 0)
    }

    /// Property access on handles and snapshots.
    pub fn property(&self, prop: &str) -> Option<Value> {
        match self {
            Value::Window(w) => match prop {
                "name" => Some(Value::Str(w.name.clone())),
                "hash" => Some(Value::Str(format_hash(w.hash))),
                _ => None,
            },
            Value::Control(c) => match prop {
                "id" => Some(Value::Str(c.node.control_id.clone())),
                "class" => Some(Value::Str(c.node.class_name.clone())),
                "window" => Some(Value::Str(c.window.name.clone())),
                _ => Attribute::from_keyword(prop).map(|a| c.attribute(a)),
            },
            Value::Snapshot(s) if prop == "raw" => Some(Value::Str(s.raw.clone())),
            Value::Snapshot(s) => s.fields.get(prop).map(|v| Value::Int(*v)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => f.write_str(s),
            Value::Int(i) => write!(f, "{i}"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Window(w) => write!(f, "{w}"),
            Value::Control(c) => write!(f, "{}/{}", c.window.name, c.node.control_id),
            Value::Snapshot(s) => write!(f, "{}:{}", s.kind, s.raw),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("`{var}` has no property `{prop}`")]
    UnknownProperty { var: String, prop: String },
    #[error("index {index} out of range for `{list}` (length {len})")]
    IndexOutOfRange { list: String, index: i64, len: usize },
}

pub type Bindings = BTreeMap<String, Value>;

fn lookup<'a>(env: &'a Bindings, name: &str) -> Result<&'a Value, EvalError> {
    env.get(name).ok_or_else(|| EvalError::UnboundVariable(name.to_string()))
}

/// Evaluates an expression. Equality is defined between two strings or two
/// integers and yields `Int(1)` or `Int(0)`.
pub fn eval_expr(expr: &Expr, env: &Bindings) -> Result<Value, EvalError> {
    match expr {
        Expr::Var(v) => lookup(env, v).cloned(),
        Expr::Str(s) => Ok(Value::Str(s.clone())),
        Expr::Int(i) => Ok(Value::Int(*i)),
        Expr::List(items) => Ok(Value::List(items.iter().map(Value::from_literal).collect())),
        Expr::Property { var, prop } => {
            let v = lookup(env, var)?;
            v.property(prop).ok_or_else(|| match v {
                Value::Str(_) | Value::Int(_) | Value::List(_) => {
                    EvalError::TypeMismatch(alloc::format!("`{var}` is a {}, which has no properties", v.type_name()))
                }
                _ => EvalError::UnknownProperty { var: var.clone(), prop: prop.clone() },
            })
        }
        Expr::Index { list, index } => {
            let Value::List(items) = lookup(env, list)? else {
                return Err(EvalError::TypeMismatch(alloc::format!("`{list}` is not a list")));
            };
            let i = match eval_expr(index, env)? {
                Value::Int(i) => i,
                other => return Err(EvalError::TypeMismatch(alloc::format!("index is a {}", other.type_name()))),
            };
            usize::try_from(i)
                .ok()
                .and_then(|u| items.get(u))
                .cloned()
                .ok_or(EvalError::IndexOutOfRange { list: list.clone(), index: i, len: items.len() })
        }
        Expr::Eq(a, b) => {
            let (a, b) = (eval_expr(a, env)?, eval_expr(b, env)?);
            match (&a, &b) {
                (Value::Str(x), Value::Str(y)) => Ok(Value::Int((x == y) as i64)),
                (Value::Int(x), Value::Int(y)) => Ok(Value::Int((x == y) as i64)),
                _ => Err(EvalError::TypeMismatch(alloc::format!(
                    "cannot compare {} with {}",
                    a.type_name(),
                    b.type_name()
                ))),
            }
        }
    }
}
