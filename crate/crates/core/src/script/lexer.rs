use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    Word(String),
    Str(String),
    Int(i64),
    Arrow,
    EqEq,
    Eq,
    Comma,
    LBracket,
    RBracket,
    Dot,
}

impl Token {
    pub(crate) fn describe(&self) -> String {
        match self {
            Token::Word(w) => format!("`{w}`"),
            Token::Str(_) => "string".into(),
            Token::Int(i) => format!("integer {i}"),
            Token::Arrow => "`->`".into(),
            Token::EqEq => "`==`".into(),
            Token::Eq => "`=`".into(),
            Token::Comma => "`,`".into(),
            Token::LBracket => "`[`".into(),
            Token::RBracket => "`]`".into(),
            Token::Dot => "`.`".into(),
        }
    }
}

/// Tokenizes one source line. A `#` outside a string starts a comment.
pub(crate) fn tokenize(line: &str) -> Result<Vec<Token>, String> {
    let mut tokens = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => break,
            '"' => {
                chars.next();
                let mut s = String::new();
                let mut closed = false;
                while let Some((_, c)) = chars.next() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, '"')) => s.push('"'),
                            Some((_, '\\')) => s.push('\\'),
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, 't')) => s.push('\t'),
                            Some((_, other)) => return Err(format!("unknown escape `\\{other}`")),
                            None => return Err("unterminated string".into()),
                        },
                        c => s.push(c),
                    }
                }
                if !closed {
                    return Err("unterminated string".into());
                }
                tokens.push(Token::Str(s));
            }
            '-' => {
                chars.next();
                match chars.peek() {
                    Some(&(_, '>')) => {
                        chars.next();
                        tokens.push(Token::Arrow);
                    }
                    Some(&(_, d)) if d.is_ascii_digit() => {
                        let end = scan_while(&mut chars, |c| c.is_ascii_digit());
                        let text = &line[start..end];
                        let v = text
                            .parse::<i64>()
                            .map_err(|_| format!("integer `{text}` out of range"))?;
                        tokens.push(Token::Int(v));
                    }
                    _ => return Err("unexpected `-`".into()),
                }
            }
            d if d.is_ascii_digit() => {
                let end = scan_while(&mut chars, |c| c.is_ascii_digit());
                let text = &line[start..end];
                if let Some(&(_, c)) = chars.peek() {
                    if c.is_alphabetic() || c == '_' {
                        return Err(format!("malformed number starting `{text}`"));
                    }
                }
                let v = text
                    .parse::<i64>()
                    .map_err(|_| format!("integer `{text}` out of range"))?;
                tokens.push(Token::Int(v));
            }
            c if c.is_alphabetic() || c == '_' => {
                let end = scan_while(&mut chars, |c| c.is_alphanumeric() || c == '_');
                tokens.push(Token::Word(line[start..end].into()));
            }
            '=' => {
                chars.next();
                if matches!(chars.peek(), Some(&(_, '='))) {
                    chars.next();
                    tokens.push(Token::EqEq);
                } else {
                    tokens.push(Token::Eq);
                }
            }
            ',' | '[' | ']' | '.' => {
                chars.next();
                tokens.push(match c {
                    ',' => Token::Comma,
                    '[' => Token::LBracket,
                    ']' => Token::RBracket,
                    _ => Token::Dot,
                });
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(tokens)
}

fn scan_while(
    chars: &mut core::iter::Peekable<core::str::CharIndices<'_>>,
    pred: impl Fn(char) -> bool,
) -> usize {
    let mut end = 0;
    while let Some(&(i, c)) = chars.peek() {
        if !pred(c) {
            return i;
        }
        end = i + c.len_utf8();
        chars.next();
    }
    end
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_of_a_wait_line() {
        let t = tokenize(r#"wait_ui control "win/btn" visible timeout=10 poll=-5 # trailing"#).unwrap();
        assert_eq!(t.len(), 10);
        assert_eq!(t[2], Token::Str("win/btn".into()));
        assert_eq!(t[9], Token::Int(-5));
    }

    #[test]
    fn hash_inside_string_is_not_a_comment() {
        let t = tokenize(r#"voice "a#b""#).unwrap();
        assert_eq!(t[1], Token::Str("a#b".into()));
    }

    #[test]
    fn rejects_garbage() {
        assert!(tokenize("voice \"abc").is_err());
        assert!(tokenize("sleep 12ab").is_err());
        assert!(tokenize("let x = @").is_err());
    }
}
