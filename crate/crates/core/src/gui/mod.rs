//! GUI object model exposed by the device: windows, control trees, handles,
//! and the predicates scripts wait on.

mod dumpq;
mod query;

pub use dumpq::{format_node_line, is_valid_ident, parse_node_line, parse_tree, serialize_tree, tree_lines, DumpError};
pub use query::{
    check_predicate, get_control_item, get_focused_window, list_windows, query_state, resolve_window,
    wait_ui_state, DeviceLink, GuiError, QueryResult, StateSummary, WaitOutcome,
};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::value::Value;

pub fn format_hash(hash: u32) -> String {
    format!("{hash:08X}")
}

/// Exactly eight hex digits, either case.
pub fn parse_hash(text: &str) -> Option<u32> {
    if text.len() == 8 && text.bytes().all(|b| b.is_ascii_hexdigit()) {
        u32::from_str_radix(text, 16).ok()
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WindowHandle {
    pub hash: u32,
    pub name: String,
}

impl WindowHandle {
    pub fn new(hash: u32, name: impl Into<String>) -> Self {
        WindowHandle { hash, name: name.into() }
    }

    /// `LISTWINDOWS` entry line: `<hash8> <name>`.
    pub fn to_list_line(&self) -> String {
        format!("{} {}", format_hash(self.hash), self.name)
    }

    pub fn parse_list_line(line: &str) -> Option<WindowHandle> {
        let (hash, name) = line.split_once(' ')?;
        if name.is_empty() {
            return None;
        }
        Some(WindowHandle::new(parse_hash(hash)?, name))
    }
}

impl fmt::Display for WindowHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, format_hash(self.hash))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Bounds {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl Bounds {
    pub fn new(x: i32, y: i32, w: u32, h: u32) -> Self {
        Bounds { x, y, w, h }
    }

    pub fn parse(text: &str) -> Option<Bounds> {
        let mut it = text.split(',');
        let b = Bounds {
            x: it.next()?.parse().ok()?,
            y: it.next()?.parse().ok()?,
            w: it.next()?.parse().ok()?,
            h: it.next()?.parse().ok()?,
        };
        it.next().is_none().then_some(b)
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.x, self.y, self.w, self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GuiNode {
    pub control_id: String,
    pub class_name: String,
    pub text: String,
    pub focused: bool,
    pub visible: bool,
    pub bounds: Bounds,
    pub children: Vec<GuiNode>,
}

impl GuiNode {
    pub fn new(class_name: impl Into<String>, control_id: impl Into<String>) -> Self {
        GuiNode {
            control_id: control_id.into(),
            class_name: class_name.into(),
            text: String::new(),
            focused: false,
            visible: true,
            bounds: Bounds::default(),
            children: Vec::new(),
        }
    }

    /// Depth-first, pre-order search.
    pub fn find(&self, control_id: &str) -> Option<&GuiNode> {
        if self.control_id == control_id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(control_id))
    }

    pub fn find_mut(&mut self, control_id: &str) -> Option<&mut GuiNode> {
        if self.control_id == control_id {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(control_id))
    }

    /// Nodes in pre-order.
    pub fn preorder(&self) -> Vec<&GuiNode> {
        let mut out = Vec::new();
        let mut stack = alloc::vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    pub fn without_children(&self) -> GuiNode {
        GuiNode {
            children: Vec::new(),
            ..self.clone()
        }
    }

    /// Whether every control id in the tree is distinct.
    pub fn has_unique_ids(&self) -> bool {
        let mut ids: Vec<&str> = self.preorder().iter().map(|n| n.control_id.as_str()).collect();
        let n = ids.len();
        ids.sort_unstable();
        ids.dedup();
        ids.len() == n
    }

    /// Wire text of one attribute: flags as `0`/`1`, bounds as `x,y,w,h`.
    pub fn attribute_text(&self, attr: Attribute) -> String {
        match attr {
            Attribute::Text => self.text.clone(),
            Attribute::Name => self.class_name.clone(),
            Attribute::Focused => flag(self.focused).to_string(),
            Attribute::Visible => flag(self.visible).to_string(),
            Attribute::Bounds => self.bounds.to_string(),
        }
    }

    pub fn attribute(&self, attr: Attribute) -> Value {
        match attr {
            Attribute::Focused => Value::Int(self.focused as i64),
            Attribute::Visible => Value::Int(self.visible as i64),
            _ => Value::Str(self.attribute_text(attr)),
        }
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// A point-in-time snapshot of one control; never re-queried.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlHandle {
    pub window: WindowHandle,
    pub node: GuiNode,
    pub fetched_at_ms: u64,
}

impl ControlHandle {
    pub fn attribute(&self, attr: Attribute) -> Value {
        self.node.attribute(attr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attribute {
    Text,
    /// The control's class name.
    Name,
    Focused,
    Visible,
    Bounds,
}

impl Attribute {
    pub const ALL: [Attribute; 5] = [
        Attribute::Text,
        Attribute::Name,
        Attribute::Focused,
        Attribute::Visible,
        Attribute::Bounds,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Attribute::Text => "text",
            Attribute::Name => "name",
            Attribute::Focused => "focused",
            Attribute::Visible => "visible",
            Attribute::Bounds => "bounds",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.keyword().eq_ignore_ascii_case(word))
    }

    pub fn is_flag(self) -> bool {
        matches!(self, Attribute::Focused | Attribute::Visible)
    }
}

/// Granularity of a state query, coarsest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QueryLevel {
    System,
    App,
    Window,
    Control,
    Property,
}

/// Levels a UI predicate can be stated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaitLevel {
    System,
    App,
    Window,
    Control,
}

impl WaitLevel {
    pub fn keyword(self) -> &'static str {
        match self {
            WaitLevel::System => "system",
            WaitLevel::App => "app",
            WaitLevel::Window => "window",
            WaitLevel::Control => "control",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        [WaitLevel::System, WaitLevel::App, WaitLevel::Window, WaitLevel::Control]
            .into_iter()
            .find(|l| l.keyword().eq_ignore_ascii_case(word))
    }

    pub fn supports_focus(self) -> bool {
        matches!(self, WaitLevel::Window | WaitLevel::Control)
    }

    pub fn query_level(self) -> QueryLevel {
        match self {
            WaitLevel::System => QueryLevel::System,
            WaitLevel::App => QueryLevel::App,
            WaitLevel::Window => QueryLevel::Window,
            WaitLevel::Control => QueryLevel::Control,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Exists,
    Visible,
    Focused,
}

impl Condition {
    pub fn keyword(self) -> &'static str {
        match self {
            Condition::Exists => "exists",
            Condition::Visible => "visible",
            Condition::Focused => "focused",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        [Condition::Exists, Condition::Visible, Condition::Focused]
            .into_iter()
            .find(|c| c.keyword().eq_ignore_ascii_case(word))
    }
}

/// `system`: subject is a window name. `app`: a package prefix.
/// `window`: a window name or hash. `control`: `<window>/<controlId>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UiPredicate {
    pub level: WaitLevel,
    pub subject: String,
    pub condition: Condition,
}

impl UiPredicate {
    pub fn new(level: WaitLevel, subject: impl Into<String>, condition: Condition) -> Option<Self> {
        if condition == Condition::Focused && !level.supports_focus() {
            return None;
        }
        Some(UiPredicate {
            level,
            subject: subject.into(),
            condition,
        })
    }
}

pub const DEFAULT_POLL_MS: u64 = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaitConfig {
    timeout_ms: u64,
    poll_ms: u64,
}

impl WaitConfig {
    /// Requires `0 < poll <= timeout`.
    pub fn new(timeout_ms: u64, poll_ms: u64) -> Option<Self> {
        (poll_ms > 0 && poll_ms <= timeout_ms).then_some(WaitConfig { timeout_ms, poll_ms })
    }

    /// Default poll period, clamped to the timeout.
    pub fn with_timeout(timeout_ms: u64) -> Option<Self> {
        Self::new(timeout_ms, DEFAULT_POLL_MS.min(timeout_ms))
    }

    pub fn timeout_ms(&self) -> u64 {
        self.timeout_ms
    }

    pub fn poll_ms(&self) -> u64 {
        self.poll_ms
    }

    /// Upper bound on state queries one wait may issue.
    pub fn max_queries(&self) -> u64 {
        self.timeout_ms.div_ceil(self.poll_ms) + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_rendering() {
        assert_eq!(format_hash(0x2A), "0000002A");
        assert_eq!(parse_hash("0000002a"), Some(0x2A));
        assert_eq!(parse_hash("2A"), None);
        assert_eq!(parse_hash("0000002G"), None);
    }

    #[test]
    fn attribute_snapshot_values() {
        let mut n = GuiNode::new("TextView", "city");
        n.text = "Beijing".into();
        n.bounds = Bounds::new(0, 0, 100, 40);
        assert_eq!(n.attribute(Attribute::Text), Value::Str("Beijing".into()));
        assert_eq!(n.attribute(Attribute::Visible), Value::Int(1));
        assert_eq!(n.attribute(Attribute::Bounds), Value::Str("0,0,100,40".into()));
        assert_eq!(Bounds::parse("0,0,100,40"), Some(n.bounds));
    }

    #[test]
    fn focus_predicate_levels() {
        assert!(UiPredicate::new(WaitLevel::App, "com.x", Condition::Focused).is_none());
        assert!(UiPredicate::new(WaitLevel::Control, "w/c", Condition::Focused).is_some());
    }

    #[test]
    fn wait_config_invariant() {
        assert!(WaitConfig::new(1000, 0).is_none());
        assert!(WaitConfig::new(1000, 2000).is_none());
        assert_eq!(WaitConfig::new(2000, 500).unwrap().max_queries(), 5);
        assert_eq!(WaitConfig::with_timeout(1000).unwrap().poll_ms(), 1000);
    }
}
