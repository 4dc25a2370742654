use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::{Expr, ForeachSource, Literal, Operand, ScriptAst, Statement, StatementKind};
use super::lexer::{tokenize, Token};
use super::ScriptError;
use crate::gui::{Attribute, Condition, WaitLevel};
use crate::resource::{Percentage, ReleaseTarget, ResourceKind};

/// Parses a whole script. Blank lines and comments produce no statements;
/// `foreach`/`end` nesting must balance.
pub fn parse_script(source: &str, source_name: &str) -> Result<ScriptAst, ScriptError> {
    let mut statements = Vec::new();
    let mut open_blocks: Vec<usize> = Vec::new();
    for (i, raw) in source.split('\n').enumerate() {
        let line_no = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let tokens = tokenize(raw).map_err(|message| ScriptError::Syntax { line: line_no, message })?;
        if tokens.is_empty() {
            continue;
        }
        let kind = LineParser { tokens: &tokens, pos: 0 }
            .statement()
            .map_err(|message| ScriptError::Syntax { line: line_no, message })?;
        match kind {
            StatementKind::Foreach { .. } => open_blocks.push(line_no),
            StatementKind::End
                if open_blocks.pop().is_none() => {
                    return Err(ScriptError::UnbalancedBlock {
                        line: line_no,
                        message: "`end` without `foreach`".into(),
                    });
                }
            _ => {}
        }
        statements.push(Statement {
            index: statements.len(),
            line: line_no,
            kind,
        });
    }
    if let Some(line) = open_blocks.pop() {
        return Err(ScriptError::UnbalancedBlock {
            line,
            message: "`foreach` without matching `end`".into(),
        });
    }
    Ok(ScriptAst {
        source_name: source_name.to_string(),
        statements,
    })
}

struct LineParser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

type PResult<T> = Result<T, String>;

impl LineParser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => t.describe(),
            None => "end of line".into(),
        }
    }

    fn expect(&mut self, want: Token) -> PResult<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected {}, found {}", want.describe(), self.found()))
        }
    }

    fn word(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Token::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(format!("expected {what}, found {}", self.found())),
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Some(Token::Word(w)) if w.eq_ignore_ascii_case(kw) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(format!("expected `{kw}`, found {}", self.found())),
        }
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Token::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(format!("expected {what} string, found {}", self.found())),
        }
    }

    fn int(&mut self, what: &str) -> PResult<i64> {
        match self.peek() {
            Some(Token::Int(i)) => {
                let i = *i;
                self.pos += 1;
                Ok(i)
            }
            _ => Err(format!("expected {what}, found {}", self.found())),
        }
    }

    fn non_negative(&mut self, what: &str) -> PResult<u64> {
        let v = self.int(what)?;
        u64::try_from(v).map_err(|_| format!("{what} must not be negative"))
    }

    fn operand(&mut self, what: &str) -> PResult<Operand> {
        match self.peek() {
            Some(Token::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(Operand::Str(s))
            }
            Some(Token::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(Operand::Var(w))
            }
            _ => Err(format!("expected {what} (string or variable), found {}", self.found())),
        }
    }

    fn setting(&mut self, name: &str) -> PResult<i64> {
        self.keyword(name)?;
        self.expect(Token::Eq)?;
        self.int(name)
    }

    fn binding(&mut self) -> PResult<String> {
        self.expect(Token::Arrow)?;
        self.word("variable name")
    }

    fn resource(&mut self) -> PResult<ResourceKind> {
        let w = self.word("resource")?;
        ResourceKind::from_script_name(&w).ok_or_else(|| format!("unknown resource `{w}`"))
    }

    fn list(&mut self) -> PResult<Vec<Literal>> {
        self.expect(Token::LBracket)?;
        let mut items = Vec::new();
        if self.peek() == Some(&Token::RBracket) {
            self.pos += 1;
            return Ok(items);
        }
        loop {
            let item = match self.next() {
                Some(Token::Str(s)) => Literal::Str(s.clone()),
                Some(Token::Int(i)) => Literal::Int(*i),
                _ => return Err("list elements must be string or integer literals".into()),
            };
            if let Some(first) = items.first() {
                if core::mem::discriminant(first) != core::mem::discriminant(&item) {
                    return Err("list elements must all have the same type".into());
                }
            }
            items.push(item);
            match self.next() {
                Some(Token::Comma) => continue,
                Some(Token::RBracket) => break,
                _ => return Err("expected `,` or `]` in list".into()),
            }
        }
        Ok(items)
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek() {
            Some(Token::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(Expr::Str(s))
            }
            Some(Token::Int(i)) => {
                let i = *i;
                self.pos += 1;
                Ok(Expr::Int(i))
            }
            Some(Token::LBracket) => Ok(Expr::List(self.list()?)),
            Some(Token::Word(_)) => {
                let var = self.word("variable")?;
                match self.peek() {
                    Some(Token::Dot) => {
                        self.pos += 1;
                        let prop = self.word("property name")?;
                        Ok(Expr::Property { var, prop })
                    }
                    Some(Token::LBracket) => {
                        self.pos += 1;
                        let index = match self.next() {
                            Some(Token::Int(i)) => Expr::Int(*i),
                            Some(Token::Word(w)) => Expr::Var(w.clone()),
                            _ => return Err("index must be an integer or a variable".into()),
                        };
                        self.expect(Token::RBracket)?;
                        Ok(Expr::Index { list: var, index: Box::new(index) })
                    }
                    _ => Ok(Expr::Var(var)),
                }
            }
            _ => Err(format!("expected expression, found {}", self.found())),
        }
    }

    fn finish(&self, kind: StatementKind) -> PResult<StatementKind> {
        match self.peek() {
            None => Ok(kind),
            Some(t) => Err(format!("unexpected {} after `{}` statement", t.describe(), kind.name())),
        }
    }

    fn statement(mut self) -> PResult<StatementKind> {
        let head = self.word("statement keyword")?;
        let kw = head.to_ascii_lowercase();
        let kind = match kw.as_str() {
            "connect" => StatementKind::Connect,
            "end" => StatementKind::End,
            "start_activity" => StatementKind::StartActivity {
                activity: non_empty(self.operand("activity name")?, "activity name")?,
            },
            "press" => StatementKind::Press { key: self.word("key name")? },
            "consume" => {
                let resource = self.resource()?;
                let p = self.int("percentage")?;
                let percentage =
                    Percentage::new(p).ok_or_else(|| format!("percentage {p} out of range 0..100"))?;
                StatementKind::ConsumeResource { resource, percentage }
            }
            "release" => {
                let w = self.word("resource or `all`")?;
                let target = if w.eq_ignore_ascii_case("all") {
                    ReleaseTarget::All
                } else {
                    ReleaseTarget::Kind(
                        ResourceKind::from_script_name(&w).ok_or_else(|| format!("unknown resource `{w}`"))?,
                    )
                };
                StatementKind::ReleaseResource { target }
            }
            "query" => {
                let resource = self.resource()?;
                StatementKind::QueryResource { resource, into: self.binding()? }
            }
            "voice" => StatementKind::Voice {
                text: non_empty(self.operand("voice text")?, "voice text")?,
            },
            "voice_noisy" => {
                let text = non_empty(self.operand("voice text")?, "voice text")?;
                let snr_db = self.setting("snr")?;
                StatementKind::VoiceNoisy { text, snr_db }
            }
            "wait_ui" => {
                let lw = self.word("level")?;
                let level = WaitLevel::from_keyword(&lw).ok_or_else(|| format!("unknown level `{lw}`"))?;
                let subject = self.string("subject")?;
                let cw = self.word("predicate")?;
                let condition =
                    Condition::from_keyword(&cw).ok_or_else(|| format!("unknown predicate `{cw}`"))?;
                if condition == Condition::Focused && !level.supports_focus() {
                    return Err(format!("`focused` is not defined at {} level", level.keyword()));
                }
                let timeout = self.setting("timeout")?;
                if timeout <= 0 {
                    return Err("timeout must be positive".into());
                }
                let poll_ms = if self.peek().is_some() {
                    let poll = self.setting("poll")?;
                    if poll <= 0 || poll > timeout {
                        return Err("poll must be positive and not exceed timeout".into());
                    }
                    Some(poll as u64)
                } else {
                    None
                };
                StatementKind::WaitUi { level, subject, condition, timeout_ms: timeout as u64, poll_ms }
            }
            "focused" => StatementKind::FocusedWindow { into: self.binding()? },
            "get_control" => {
                let window = self.operand("window id")?;
                let control = self.operand("control id")?;
                StatementKind::GetControl { window, control, into: self.binding()? }
            }
            "get_attr" => {
                let handle = self.word("control variable")?;
                self.expect(Token::Dot)?;
                let aw = self.word("attribute")?;
                let attr = Attribute::from_keyword(&aw).ok_or_else(|| format!("unknown attribute `{aw}`"))?;
                StatementKind::GetAttribute { handle, attr, into: self.binding()? }
            }
            "assert" => {
                let left = self.primary()?;
                self.expect(Token::EqEq)?;
                let right = self.primary()?;
                StatementKind::Assert { condition: Expr::Eq(Box::new(left), Box::new(right)) }
            }
            "sleep" => StatementKind::Sleep { millis: self.non_negative("sleep duration")? },
            "let" => {
                let name = self.word("variable name")?;
                self.expect(Token::Eq)?;
                let value = match self.peek() {
                    Some(Token::Str(_)) => Literal::Str(self.string("value")?),
                    Some(Token::Int(_)) => Literal::Int(self.int("value")?),
                    Some(Token::LBracket) => Literal::List(self.list()?),
                    _ => return Err(format!("expected literal value, found {}", self.found())),
                };
                StatementKind::Let { name, value }
            }
            "foreach" => {
                let first = self.word("loop variable")?;
                let (index, item) = if self.peek() == Some(&Token::Comma) {
                    self.pos += 1;
                    (Some(first), self.word("loop variable")?)
                } else {
                    (None, first)
                };
                self.keyword("in")?;
                let source = match self.peek() {
                    Some(Token::LBracket) => ForeachSource::List(self.list()?),
                    _ => ForeachSource::Var(self.word("list variable")?),
                };
                StatementKind::Foreach { index, item, source }
            }
            _ => return Err(format!("unknown statement `{head}`")),
        };
        self.finish(kind)
    }
}

fn non_empty(op: Operand, what: &str) -> PResult<Operand> {
    match &op {
        Operand::Str(s) if s.is_empty() => Err(format!("{what} must not be empty")),
        _ => Ok(op),
    }
}
