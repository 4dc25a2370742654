//! Tree dump codec. One node per line:
//! `<2*depth spaces><className> id=<controlId> text="<escaped>" focused=<0|1> visible=<0|1> bounds=<x>,<y>,<w>,<h>`
//! with `\"` and `\\` as the only escapes.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Bounds, GuiNode};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DumpError {
    #[error("malformed node line {line:?}: {reason}")]
    BadLine { line: String, reason: &'static str },
    #[error("empty tree")]
    Empty,
    #[error("more than one root node")]
    MultipleRoots,
    #[error("depth jumps by more than one level")]
    DepthJump,
}

/// Class names and control ids: non-empty, no whitespace, quotes, `/` or `=`.
pub fn is_valid_ident(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || matches!(c, '"' | '/' | '=' | '\\'))
}

pub fn format_node_line(node: &GuiNode, depth: usize) -> String {
    let mut out = String::with_capacity(64 + node.text.len());
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(&node.class_name);
    out.push_str(" id=");
    out.push_str(&node.control_id);
    out.push_str(" text=\"");
    for c in node.text.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push_str(&format!(
        "\" focused={} visible={} bounds={}",
        node.focused as u8, node.visible as u8, node.bounds
    ));
    out
}

pub fn parse_node_line(line: &str) -> Result<(usize, GuiNode), DumpError> {
    let bad = |reason| DumpError::BadLine {
        line: line.to_string(),
        reason,
    };
    let indent = line.len() - line.trim_start_matches(' ').len();
    if !indent.is_multiple_of(2) {
        return Err(bad("odd indentation"));
    }
    let rest = &line[indent..];
    let (class_name, rest) = rest.split_once(' ').ok_or_else(|| bad("missing fields"))?;
    let rest = rest.strip_prefix("id=").ok_or_else(|| bad("expected id="))?;
    let (control_id, rest) = rest.split_once(' ').ok_or_else(|| bad("missing text"))?;
    if !is_valid_ident(class_name) || !is_valid_ident(control_id) {
        return Err(bad("invalid class name or id"));
    }
    let rest = rest.strip_prefix("text=\"").ok_or_else(|| bad("expected text=\""))?;
    let mut text = String::new();
    let mut chars = rest.char_indices();
    let mut after = None;
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some((_, e @ ('"' | '\\'))) => text.push(e),
                _ => return Err(bad("bad escape in text")),
            },
            '"' => {
                after = Some(&rest[i + 1..]);
                break;
            }
            c => text.push(c),
        }
    }
    let rest = after.ok_or_else(|| bad("unterminated text"))?;
    let rest = rest.strip_prefix(" focused=").ok_or_else(|| bad("expected focused="))?;
    let (focused, rest) = parse_flag(rest).ok_or_else(|| bad("focused must be 0 or 1"))?;
    let rest = rest.strip_prefix(" visible=").ok_or_else(|| bad("expected visible="))?;
    let (visible, rest) = parse_flag(rest).ok_or_else(|| bad("visible must be 0 or 1"))?;
    let rest = rest.strip_prefix(" bounds=").ok_or_else(|| bad("expected bounds="))?;
    let bounds = Bounds::parse(rest).ok_or_else(|| bad("bad bounds"))?;
    // Reject non-canonical numbers like "+1" or "01" so the codec stays a bijection.
    if bounds.to_string() != rest {
        return Err(bad("non-canonical bounds"));
    }
    Ok((
        indent / 2,
        GuiNode {
            control_id: control_id.to_string(),
            class_name: class_name.to_string(),
            text,
            focused,
            visible,
            bounds,
            children: Vec::new(),
        },
    ))
}

fn parse_flag(s: &str) -> Option<(bool, &str)> {
    match s.as_bytes().first()? {
        b'0' => Some((false, &s[1..])),
        b'1' => Some((true, &s[1..])),
        _ => None,
    }
}

/// Node lines in pre-order, without terminators.
pub fn tree_lines(root: &GuiNode) -> Vec<String> {
    fn walk(n: &GuiNode, depth: usize, out: &mut Vec<String>) {
        out.push(format_node_line(n, depth));
        for c in &n.children {
            walk(c, depth + 1, out);
        }
    }
    let mut out = Vec::new();
    walk(root, 0, &mut out);
    out
}

/// LF-terminated node lines.
pub fn serialize_tree(root: &GuiNode) -> String {
    let mut s = String::new();
    for l in tree_lines(root) {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

pub fn parse_tree<S: AsRef<str>>(lines: &[S]) -> Result<GuiNode, DumpError> {
    let mut stack: Vec<GuiNode> = Vec::new();
    for line in lines {
        let line = line.as_ref();
        if line.is_empty() {
            continue;
        }
        let (depth, node) = parse_node_line(line)?;
        if stack.is_empty() {
            if depth != 0 {
                return Err(DumpError::DepthJump);
            }
        } else if depth == 0 {
            return Err(DumpError::MultipleRoots);
        } else if depth > stack.len() {
            return Err(DumpError::DepthJump);
        }
        while stack.len() > depth {
            let done = stack.pop().expect("non-empty");
            stack.last_mut().expect("depth > 0 keeps the root").children.push(done);
        }
        stack.push(node);
    }
    while stack.len() > 1 {
        let done = stack.pop().expect("non-empty");
        stack.last_mut().expect("len > 1").children.push(done);
    }
    stack.pop().ok_or(DumpError::Empty)
}
