use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::ast::{Expr, ForeachSource, Literal, Operand, ScriptAst, StatementKind};
use crate::gui::Attribute;
use crate::monkey::Keycode;
use crate::resource::ResourceKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub kind: DiagnosticKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    UnboundVariable(String),
    PropertyOnNonHandle { var: String, prop: String },
    UnknownProperty { var: String, prop: String },
    EndWithoutForeach,
    UnclosedForeach,
    LoopVariableShadowed(String),
    TypeMismatch(String),
    UnknownKeycode(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.kind)
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticKind::UnboundVariable(v) => write!(f, "unbound variable `{v}`"),
            DiagnosticKind::PropertyOnNonHandle { var, prop } => {
                write!(f, "`{var}.{prop}`: `{var}` is not a handle or snapshot")
            }
            DiagnosticKind::UnknownProperty { var, prop } => write!(f, "`{var}` has no property `{prop}`"),
            DiagnosticKind::EndWithoutForeach => f.write_str("`end` without `foreach`"),
            DiagnosticKind::UnclosedForeach => f.write_str("`foreach` without `end`"),
            DiagnosticKind::LoopVariableShadowed(v) => write!(f, "loop variable `{v}` rebound inside its loop"),
            DiagnosticKind::TypeMismatch(m) => write!(f, "type mismatch: {m}"),
            DiagnosticKind::UnknownKeycode(k) => write!(f, "unknown key `{k}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Ty {
    Str,
    Int,
    List(Option<Box<Ty>>),
    Window,
    Control,
    Snapshot(ResourceKind),
    Unknown,
}


impl Ty {
    fn of_literal(lit: &Literal) -> Ty {
        match lit {
            Literal::Str(_) => Ty::Str,
            Literal::Int(_) => Ty::Int,
            Literal::List(items) => Ty::List(items.first().map(|i| Box::new(Ty::of_literal(i)))),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Ty::Str => "string",
            Ty::Int => "integer",
            Ty::List(_) => "list",
            Ty::Window => "window handle",
            Ty::Control => "control handle",
            Ty::Snapshot(_) => "resource snapshot",
            Ty::Unknown => "unknown",
        }
    }
}

struct Scope {
    globals: BTreeMap<String, Ty>,
    /// Innermost loop last; each entry holds the names the loop binds.
    loops: Vec<(usize, Vec<(String, Ty)>)>,
    out: Vec<Diagnostic>,
}

impl Scope {
    fn lookup(&self, name: &str) -> Option<&Ty> {
        for (_, vars) in self.loops.iter().rev() {
            if let Some((_, ty)) = vars.iter().find(|(n, _)| n == name) {
                return Some(ty);
            }
        }
        self.globals.get(name)
    }

    fn is_loop_var(&self, name: &str) -> bool {
        self.loops.iter().any(|(_, vars)| vars.iter().any(|(n, _)| n == name))
    }

    fn bind(&mut self, line: usize, name: &str, ty: Ty) {
        if self.is_loop_var(name) {
            self.push(line, DiagnosticKind::LoopVariableShadowed(name.to_string()));
            return;
        }
        self.globals.insert(name.to_string(), ty);
    }

    fn push(&mut self, line: usize, kind: DiagnosticKind) {
        self.out.push(Diagnostic { line, kind });
    }

    fn use_var(&mut self, line: usize, name: &str) -> Ty {
        match self.lookup(name) {
            Some(t) => t.clone(),
            None => {
                self.push(line, DiagnosticKind::UnboundVariable(name.to_string()));
                Ty::Unknown
            }
        }
    }

    fn operand(&mut self, line: usize, op: &Operand) {
        if let Operand::Var(v) = op {
            let ty = self.use_var(line, v);
            if !matches!(ty, Ty::Str | Ty::Unknown) {
                self.push(line, DiagnosticKind::TypeMismatch(alloc::format!("`{v}` is a {}, expected string", ty.name())));
            }
        }
    }

    fn expr(&mut self, line: usize, e: &Expr) -> Ty {
        match e {
            Expr::Var(v) => self.use_var(line, v),
            Expr::Str(_) => Ty::Str,
            Expr::Int(_) => Ty::Int,
            Expr::List(items) => Ty::of_literal(&Literal::List(items.clone())),
            Expr::Property { var, prop } => {
                let ty = self.use_var(line, var);
                match property_type(&ty, prop) {
                    PropType::Known(t) => t,
                    PropType::NotAHandle => {
                        self.push(line, DiagnosticKind::PropertyOnNonHandle { var: var.clone(), prop: prop.clone() });
                        Ty::Unknown
                    }
                    PropType::Missing => {
                        self.push(line, DiagnosticKind::UnknownProperty { var: var.clone(), prop: prop.clone() });
                        Ty::Unknown
                    }
                }
            }
            Expr::Index { list, index } => {
                let lt = self.use_var(line, list);
                let it = self.expr(line, index);
                if !matches!(it, Ty::Int | Ty::Unknown) {
                    self.push(line, DiagnosticKind::TypeMismatch(alloc::format!("index is a {}", it.name())));
                }
                match lt {
                    Ty::List(Some(elem)) => *elem,
                    Ty::List(None) | Ty::Unknown => Ty::Unknown,
                    other => {
                        self.push(line, DiagnosticKind::TypeMismatch(alloc::format!("`{list}` is a {}, not a list", other.name())));
                        Ty::Unknown
                    }
                }
            }
            Expr::Eq(a, b) => {
                let ta = self.expr(line, a);
                let tb = self.expr(line, b);
                let comparable = matches!((&ta, &tb), (Ty::Str, Ty::Str) | (Ty::Int, Ty::Int))
                    || ta == Ty::Unknown
                    || tb == Ty::Unknown;
                if !comparable {
                    self.push(line, DiagnosticKind::TypeMismatch(alloc::format!("cannot compare {} with {}", ta.name(), tb.name())));
                }
                Ty::Int
            }
        }
    }
}

enum PropType {
    Known(Ty),
    NotAHandle,
    Missing,
}

fn property_type(ty: &Ty, prop: &str) -> PropType {
    match ty {
        Ty::Unknown => PropType::Known(Ty::Unknown),
        Ty::Str | Ty::Int | Ty::List(_) => PropType::NotAHandle,
        Ty::Window => match prop {
            "name" | "hash" => PropType::Known(Ty::Str),
            _ => PropType::Missing,
        },
        Ty::Control => match prop {
            "id" | "class" | "window" => PropType::Known(Ty::Str),
            _ => match Attribute::from_keyword(prop) {
                Some(a) if a.is_flag() => PropType::Known(Ty::Int),
                Some(_) => PropType::Known(Ty::Str),
                None => PropType::Missing,
            },
        },
        Ty::Snapshot(kind) => {
            if crate::value::snapshot_fields(*kind).contains(&prop) || prop == "raw" {
                PropType::Known(if prop == "raw" { Ty::Str } else { Ty::Int })
            } else {
                PropType::Missing
            }
        }
    }
}

/// Static checks: unbound variables, property access on values that are not
/// handles, loop-variable rebinding, block structure, and comparisons whose
/// operand types are known to differ. An empty result means well-formed.
pub fn validate(ast: &ScriptAst) -> Vec<Diagnostic> {
    let mut s = Scope {
        globals: BTreeMap::new(),
        loops: Vec::new(),
        out: Vec::new(),
    };
    for stmt in &ast.statements {
        let line = stmt.line;
        match &stmt.kind {
            StatementKind::Connect | StatementKind::ConsumeResource { .. } | StatementKind::ReleaseResource { .. } => {}
            StatementKind::Sleep { .. } | StatementKind::WaitUi { .. } => {}
            StatementKind::StartActivity { activity } => s.operand(line, activity),
            StatementKind::Voice { text } | StatementKind::VoiceNoisy { text, .. } => s.operand(line, text),
            StatementKind::Press { key } => {
                if Keycode::from_script_name(key).is_none() {
                    s.push(line, DiagnosticKind::UnknownKeycode(key.clone()));
                }
            }
            StatementKind::QueryResource { resource, into } => s.bind(line, into, Ty::Snapshot(*resource)),
            StatementKind::FocusedWindow { into } => s.bind(line, into, Ty::Window),
            StatementKind::GetControl { window, control, into } => {
                s.operand(line, window);
                s.operand(line, control);
                s.bind(line, into, Ty::Control);
            }
            StatementKind::GetAttribute { handle, attr, into } => {
                let ty = s.use_var(line, handle);
                if !matches!(ty, Ty::Control | Ty::Unknown) {
                    s.push(line, DiagnosticKind::PropertyOnNonHandle {
                        var: handle.clone(),
                        prop: attr.keyword().to_string(),
                    });
                }
                s.bind(line, into, if attr.is_flag() { Ty::Int } else { Ty::Str });
            }
            StatementKind::Assert { condition } => {
                s.expr(line, condition);
            }
            StatementKind::Let { name, value } => s.bind(line, name, Ty::of_literal(value)),
            StatementKind::Foreach { index, item, source } => {
                let elem = match source {
                    ForeachSource::List(items) => items.first().map(Ty::of_literal).unwrap_or(Ty::Unknown),
                    ForeachSource::Var(v) => match s.use_var(line, v) {
                        Ty::List(Some(e)) => *e,
                        Ty::List(None) | Ty::Unknown => Ty::Unknown,
                        other => {
                            s.push(line, DiagnosticKind::TypeMismatch(alloc::format!("`{v}` is a {}, not a list", other.name())));
                            Ty::Unknown
                        }
                    },
                };
                let mut vars = Vec::new();
                for name in index.iter().chain(core::iter::once(item)) {
                    if s.is_loop_var(name) {
                        s.push(line, DiagnosticKind::LoopVariableShadowed(name.clone()));
                    }
                }
                if let Some(i) = index {
                    vars.push((i.clone(), Ty::Int));
                }
                vars.push((item.clone(), elem));
                s.loops.push((line, vars));
            }
            StatementKind::End => {
                if s.loops.pop().is_none() {
                    s.push(line, DiagnosticKind::EndWithoutForeach);
                }
            }
        }
    }
    while let Some((line, _)) = s.loops.pop() {
        s.push(line, DiagnosticKind::UnclosedForeach);
    }
    s.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::parse_script;

    fn diags(src: &str) -> Vec<DiagnosticKind> {
        validate(&parse_script(src, "t").unwrap()).into_iter().map(|d| d.kind).collect()
    }

    #[test]
    fn unbound_in_assert() {
        assert_eq!(diags(r#"assert x == "a""#), [DiagnosticKind::UnboundVariable("x".into())]);
    }

    #[test]
    fn loop_variable_shadowing() {
        let d = diags("foreach v in [1, 2]\n  let v = 3\nend\n");
        assert_eq!(d, [DiagnosticKind::LoopVariableShadowed("v".into())]);
    }

    #[test]
    fn loop_variables_go_out_of_scope() {
        let d = diags("foreach v in [1]\nend\nassert v == 1\n");
        assert_eq!(d, [DiagnosticKind::UnboundVariable("v".into())]);
    }

    #[test]
    fn property_on_string() {
        let d = diags("let s = \"x\"\nassert s.name == \"x\"\n");
        assert!(matches!(d[0], DiagnosticKind::PropertyOnNonHandle { .. }), "{d:?}");
    }

    #[test]
    fn static_type_mismatch() {
        let d = diags("focused -> w\nassert w.name == 5\n");
        assert!(matches!(d[..], [DiagnosticKind::TypeMismatch(_)]), "{d:?}");
    }

    #[test]
    fn indexing_with_loop_index() {
        let d = diags("let a = [\"p\", \"q\"]\nlet b = [\"p\", \"q\"]\nforeach i, x in a\n  assert x == b[i]\nend\n");
        assert!(d.is_empty(), "{d:?}");
    }

    #[test]
    fn end_without_foreach_on_hand_built_ast() {
        use crate::script::{ScriptAst, Statement};
        let ast = ScriptAst {
            source_name: "t".into(),
            statements: alloc::vec![Statement { index: 0, line: 4, kind: StatementKind::End }],
        };
        assert_eq!(validate(&ast), [Diagnostic { line: 4, kind: DiagnosticKind::EndWithoutForeach }]);
    }

    #[test]
    fn unknown_key() {
        assert_eq!(diags("press KEYCODE_BOGUS"), [DiagnosticKind::UnknownKeycode("KEYCODE_BOGUS".into())]);
        assert!(diags("press BACK\npress KEYCODE_HOME").is_empty());
    }
}
