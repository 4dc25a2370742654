//! The line-oriented test-script language: one statement per line, `#`
//! comments, `foreach`/`end` blocks.

mod ast;
mod lexer;
mod parse;
mod validate;

pub use ast::{ForeachSource, Literal, Operand, ScriptAst, Statement, StatementKind, Expr};
pub use parse::parse_script;
pub use validate::{validate, Diagnostic, DiagnosticKind};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unbalanced block: {message}")]
    UnbalancedBlock { line: usize, message: String },
}

impl ScriptError {
    pub fn line(&self) -> usize {
        match self {
            ScriptError::Syntax { line, .. } | ScriptError::UnbalancedBlock { line, .. } => *line,
        }
    }

    /// The error without its line prefix.
    pub fn message(&self) -> String {
        match self {
            ScriptError::Syntax { message, .. } => message.clone(),
            ScriptError::UnbalancedBlock { message, .. } => alloc::format!("unbalanced block: {message}"),
        }
    }
}
