//! `.scn` scenario files.
//!
//! ```text
//! activity com.example.Home
//!   FrameLayout id=root text="" focused=0 visible=1 bounds=0,0,1920,1080
//!     Button id=ok text="OK" focused=1 visible=1 bounds=10,10,100,40
//! voice "open home" -> com.example.Home
//! at 1.5 set com.example.Home/ok visible=0
//! at 2 start com.example.Home
//! initial com.example.Home
//! ```

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::gui::{is_valid_ident, parse_tree, Attribute, Bounds, GuiNode};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("scenario line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

/// Recognized text to activity name. Lookups are exact.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandTable {
    entries: BTreeMap<String, String>,
}

impl CommandTable {
    /// Fails if the key is already present.
    pub fn insert(&mut self, text: impl Into<String>, activity: impl Into<String>) -> Result<(), String> {
        let text = text.into();
        if self.entries.contains_key(&text) {
            return Err(text);
        }
        self.entries.insert(text, activity.into());
        Ok(())
    }

    /// Replaces the target of an existing entry, or adds one.
    pub fn set(&mut self, text: impl Into<String>, activity: impl Into<String>) {
        self.entries.insert(text.into(), activity.into());
    }

    pub fn lookup(&self, text: &str) -> Option<&str> {
        self.entries.get(text).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MutationAction {
    Set {
        activity: String,
        control: String,
        attr: Attribute,
        value: String,
    },
    Start {
        activity: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutation {
    pub at_ms: u64,
    pub action: MutationAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Scenario {
    /// Activities in declaration order.
    pub activities: Vec<(String, GuiNode)>,
    pub commands: CommandTable,
    /// Declaration order; the simulator applies equal times in this order.
    pub mutations: Vec<Mutation>,
    pub initial: Option<String>,
}

impl Scenario {
    pub fn activity(&self, name: &str) -> Option<&GuiNode> {
        self.activities.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

/// Seconds with up to three decimals, as milliseconds.
fn parse_seconds(text: &str) -> Option<u64> {
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    if whole.is_empty() || frac.len() > 3 || !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut ms: u64 = whole.parse::<u64>().ok()?.checked_mul(1000)?;
    if !frac.is_empty() {
        let scale = [100, 10, 1][frac.len() - 1];
        ms += frac.parse::<u64>().ok()? * scale;
    }
    Some(ms)
}

fn parse_quoted(text: &str) -> Option<String> {
    let inner = text.strip_prefix('"')?.strip_suffix('"')?;
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => out.push(chars.next()?),
            '"' => return None,
            c => out.push(c),
        }
    }
    Some(out)
}

/// Checks and normalizes a value for `attr`.
pub(crate) fn parse_attr_value(attr: Attribute, raw: &str) -> Option<String> {
    match attr {
        Attribute::Text => parse_quoted(raw).or_else(|| (!raw.contains('"')).then(|| raw.to_string())),
        Attribute::Name => is_valid_ident(raw).then(|| raw.to_string()),
        Attribute::Focused | Attribute::Visible => matches!(raw, "0" | "1").then(|| raw.to_string()),
        Attribute::Bounds => Bounds::parse(raw).map(|b| b.to_string()),
    }
}

pub(crate) fn apply_attr(node: &mut GuiNode, attr: Attribute, value: &str) {
    match attr {
        Attribute::Text => node.text = value.to_string(),
        Attribute::Name => node.class_name = value.to_string(),
        Attribute::Focused => node.focused = value == "1",
        Attribute::Visible => node.visible = value == "1",
        Attribute::Bounds => {
            if let Some(b) = Bounds::parse(value) {
                node.bounds = b;
            }
        }
    }
}

struct Pending {
    name: String,
    line: usize,
    body: Vec<String>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut sc = Scenario::default();
    let mut open: Option<Pending> = None;
    // Activity references are checked once every activity is known.
    let mut refs: Vec<(usize, String)> = Vec::new();
    let mut control_refs: Vec<(usize, String, String)> = Vec::new();

    let close = |sc: &mut Scenario, p: Pending| -> Result<(), ScenarioError> {
        let tree = parse_tree(&p.body).map_err(|e| ScenarioError {
            line: p.line,
            message: alloc::format!("activity {}: {e}", p.name),
        })?;
        if !tree.has_unique_ids() {
            return Err(ScenarioError {
                line: p.line,
                message: alloc::format!("activity {}: duplicate control id", p.name),
            });
        }
        sc.activities.push((p.name, tree));
        Ok(())
    };

    for (i, raw) in text.split('\n').enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let err = |message: &str| ScenarioError {
            line,
            message: message.to_string(),
        };
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        if let Some(node) = raw.strip_prefix("  ") {
            let Some(p) = open.as_mut() else {
                return Err(err("indented node line outside an activity"));
            };
            crate::gui::parse_node_line(node).map_err(|e| err(&e.to_string()))?;
            p.body.push(node.to_string());
            continue;
        }
        if raw.starts_with(' ') {
            return Err(err("node lines are indented by at least two spaces"));
        }
        if let Some(p) = open.take() {
            close(&mut sc, p)?;
        }
        let (keyword, rest) = raw.split_once(' ').unwrap_or((raw, ""));
        match keyword {
            "activity" => {
                let name = rest.trim();
                if !is_valid_ident(name) {
                    return Err(err("activity needs a name without spaces"));
                }
                if sc.activity(name).is_some() {
                    return Err(err("activity declared twice"));
                }
                open = Some(Pending {
                    name: name.to_string(),
                    line,
                    body: Vec::new(),
                });
            }
            "voice" => {
                let (quoted, target) = rest.rsplit_once(" -> ").ok_or_else(|| err("expected voice \"<text>\" -> <activity>"))?;
                let text = parse_quoted(quoted.trim()).ok_or_else(|| err("voice text must be quoted"))?;
                if text.is_empty() {
                    return Err(err("empty voice text"));
                }
                let target = target.trim();
                sc.commands
                    .insert(text.to_lowercase(), target)
                    .map_err(|_| err("duplicate voice command"))?;
                refs.push((line, target.to_string()));
            }
            "at" => {
                let parts: Vec<&str> = rest.splitn(3, ' ').collect();
                let [secs, verb, arg] = parts[..] else {
                    return Err(err("expected at <seconds> set|start ..."));
                };
                let at_ms = parse_seconds(secs).ok_or_else(|| err("bad time"))?;
                let action = match verb {
                    "start" => {
                        let activity = arg.trim().to_string();
                        refs.push((line, activity.clone()));
                        MutationAction::Start { activity }
                    }
                    "set" => {
                        let (path, assign) = arg.split_once(' ').ok_or_else(|| err("expected <activity>/<control> <attr>=<value>"))?;
                        let (activity, control) = path.split_once('/').ok_or_else(|| err("expected <activity>/<control>"))?;
                        let (attr, value) = assign.split_once('=').ok_or_else(|| err("expected <attr>=<value>"))?;
                        let attr = Attribute::from_keyword(attr).ok_or_else(|| err("unknown attribute"))?;
                        let value = parse_attr_value(attr, value).ok_or_else(|| err("bad attribute value"))?;
                        control_refs.push((line, activity.to_string(), control.to_string()));
                        MutationAction::Set {
                            activity: activity.to_string(),
                            control: control.to_string(),
                            attr,
                            value,
                        }
                    }
                    _ => return Err(err("expected set or start")),
                };
                sc.mutations.push(Mutation { at_ms, action });
            }
            "initial" => {
                if sc.initial.is_some() {
                    return Err(err("initial declared twice"));
                }
                let name = rest.trim().to_string();
                refs.push((line, name.clone()));
                sc.initial = Some(name);
            }
            _ => return Err(err("unknown directive")),
        }
    }
    if let Some(p) = open.take() {
        close(&mut sc, p)?;
    }
    for (line, name) in refs {
        if sc.activity(&name).is_none() {
            return Err(ScenarioError {
                line,
                message: alloc::format!("undefined activity {name}"),
            });
        }
    }
    for (line, activity, control) in control_refs {
        match sc.activity(&activity) {
            None => {
                return Err(ScenarioError {
                    line,
                    message: alloc::format!("undefined activity {activity}"),
                })
            }
            Some(tree) if tree.find(&control).is_none() => {
                return Err(ScenarioError {
                    line,
                    message: alloc::format!("activity {activity} has no control {control}"),
                })
            }
            Some(_) => {}
        }
    }
    Ok(sc)
}
