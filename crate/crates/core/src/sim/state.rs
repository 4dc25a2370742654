use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::scenario::{apply_attr, CommandTable, Mutation, MutationAction, Scenario};
use crate::gui::{format_hash, tree_lines, GuiNode, WindowHandle};
use crate::monkey::{DeviceRequest, DeviceResponse, Keycode};
use crate::reply::Reply;
use crate::voice::{recognize, AudioStream, UNKNOWN_SYMBOL};

/// Hash of the `serial`-th window. Multiplying by an odd constant is a
/// bijection on `u32`, so hashes never repeat within 2^32 windows.
pub fn window_hash(serial: u32) -> u32 {
    serial.wrapping_mul(0x9E37_79B1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimWindow {
    pub handle: WindowHandle,
    pub root: GuiNode,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("unknown activity")]
    UnknownActivity,
}

/// Device state. The stack is kept bottom first; the last window is on top
/// and focused.
#[derive(Debug, Clone, Default)]
pub struct SimState {
    templates: BTreeMap<String, GuiNode>,
    stack: Vec<SimWindow>,
    serial: u32,
    key_log: Vec<Keycode>,
    commands: CommandTable,
    mutations: Vec<Mutation>,
    applied: usize,
}

impl SimState {
    pub fn new() -> Self {
        SimState::default()
    }

    pub fn from_scenario(sc: &Scenario) -> Self {
        let mut st = SimState::new();
        for (name, tree) in &sc.activities {
            st.register_activity(name.clone(), tree.clone());
        }
        st.commands = sc.commands.clone();
        let mut mutations = sc.mutations.clone();
        mutations.sort_by_key(|m| m.at_ms);
        st.mutations = mutations;
        if let Some(initial) = &sc.initial {
            st.start_activity(initial).expect("scenario references are validated");
        }
        st
    }

    pub fn register_activity(&mut self, name: impl Into<String>, tree: GuiNode) {
        self.templates.insert(name.into(), tree);
    }

    pub fn commands(&self) -> &CommandTable {
        &self.commands
    }

    pub fn commands_mut(&mut self) -> &mut CommandTable {
        &mut self.commands
    }

    /// Live windows, top first.
    pub fn windows(&self) -> impl Iterator<Item = &SimWindow> {
        self.stack.iter().rev()
    }

    pub fn window_count(&self) -> usize {
        self.stack.len()
    }

    pub fn focused(&self) -> Option<&WindowHandle> {
        self.stack.last().map(|w| &w.handle)
    }

    pub fn key_log(&self) -> &[Keycode] {
        &self.key_log
    }

    fn window_mut(&mut self, hash: u32) -> Option<&mut SimWindow> {
        self.stack.iter_mut().find(|w| w.handle.hash == hash)
    }

    /// Pushes a new window for `name`, or raises its topmost live window.
    /// Starting the activity already on top changes nothing.
    pub fn start_activity(&mut self, name: &str) -> Result<(), SimError> {
        let tree = self.templates.get(name).ok_or(SimError::UnknownActivity)?;
        if let Some(pos) = self.stack.iter().rposition(|w| w.handle.name == name) {
            let w = self.stack.remove(pos);
            self.stack.push(w);
            return Ok(());
        }
        self.serial = self.serial.wrapping_add(1);
        let handle = WindowHandle::new(window_hash(self.serial), name);
        self.stack.push(SimWindow {
            handle,
            root: tree.clone(),
        });
        Ok(())
    }

    pub fn press(&mut self, key: Keycode) {
        self.key_log.push(key);
        match key {
            Keycode::Back => {
                if self.stack.len() > 1 {
                    self.stack.pop();
                }
            }
            Keycode::Home => self.stack.truncate(1),
            Keycode::Select => {}
            Keycode::Up | Keycode::Left => self.move_focus(false),
            Keycode::Down | Keycode::Right => self.move_focus(true),
        }
    }

    fn move_focus(&mut self, forward: bool) {
        let Some(top) = self.stack.last_mut() else { return };
        if !shift_focus(&mut top.root, forward) {
            if let Some(first) = top.root.children.first_mut() {
                first.focused = true;
            }
        }
    }

    /// Applies every mutation due at `elapsed_ms` since boot, once each.
    pub fn tick(&mut self, elapsed_ms: u64) {
        while let Some(m) = self.mutations.get(self.applied) {
            if m.at_ms > elapsed_ms {
                break;
            }
            let action = m.action.clone();
            self.applied += 1;
            match action {
                MutationAction::Start { activity } => {
                    let _ = self.start_activity(&activity);
                }
                MutationAction::Set { activity, control, attr, value } => {
                    if let Some(t) = self.templates.get_mut(&activity).and_then(|t| t.find_mut(&control)) {
                        apply_attr(t, attr, &value);
                    }
                    for w in self.stack.iter_mut().filter(|w| w.handle.name == activity) {
                        if let Some(n) = w.root.find_mut(&control) {
                            apply_attr(n, attr, &value);
                        }
                    }
                }
            }
        }
    }

    pub fn pending_mutations(&self) -> usize {
        self.mutations.len() - self.applied
    }

    pub fn handle_device(&mut self, req: &DeviceRequest) -> DeviceResponse {
        let ok = || DeviceResponse::Single(Reply::Ok);
        let error = |m: &str| DeviceResponse::Single(Reply::Error(m.to_string()));
        match req {
            DeviceRequest::Ping | DeviceRequest::Quit => ok(),
            DeviceRequest::GetFocus => match self.focused() {
                Some(h) => DeviceResponse::Single(Reply::OkPayload(format_hash(h.hash))),
                None => error("no focus"),
            },
            DeviceRequest::ListWindows => DeviceResponse::Lines(self.windows().map(|w| w.handle.to_list_line()).collect()),
            DeviceRequest::DumpQ { window, control, attr } => {
                let Some(w) = self.window_mut(*window) else {
                    return error("unknown window");
                };
                let root = &w.root;
                let Some(control) = control else {
                    return DeviceResponse::Lines(tree_lines(root));
                };
                let Some(node) = root.find(control) else {
                    return error("unknown control");
                };
                match attr {
                    None => DeviceResponse::Lines(tree_lines(&node.without_children())),
                    Some(a) => DeviceResponse::Single(Reply::OkPayload(node.attribute_text(*a))),
                }
            }
            DeviceRequest::Press(k) => {
                self.press(*k);
                ok()
            }
            DeviceRequest::StartActivity(name) => match self.start_activity(name) {
                Ok(()) => ok(),
                Err(_) => error("unknown activity"),
            },
        }
    }

    /// Recognizes the command and starts the mapped activity. Replies
    /// `OK:<text>` or `ERROR:unrecognized`.
    pub fn handle_voice(&mut self, stream: &AudioStream) -> Reply {
        let unrecognized = || Reply::Error("unrecognized".to_string());
        let Ok(text) = recognize(stream) else {
            return Reply::Error("badframe".to_string());
        };
        if text.contains(UNKNOWN_SYMBOL) {
            return unrecognized();
        }
        let Some(activity) = self.commands.lookup(&text).map(str::to_string) else {
            return unrecognized();
        };
        match self.start_activity(&activity) {
            Ok(()) => Reply::OkPayload(text),
            Err(_) => unrecognized(),
        }
    }
}

/// Moves the focus flag from the focused node to its next or previous
/// sibling, clamped at the ends. Returns false if nothing is focused.
fn shift_focus(node: &mut GuiNode, forward: bool) -> bool {
    if let Some(i) = node.children.iter().position(|c| c.focused) {
        let n = node.children.len();
        let j = if forward { (i + 1).min(n - 1) } else { i.saturating_sub(1) };
        node.children[i].focused = false;
        node.children[j].focused = true;
        return true;
    }
    node.children.iter_mut().any(|c| shift_focus(c, forward))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gui::Bounds;

    fn tree(ids: &[&str]) -> GuiNode {
        let mut root = GuiNode::new("FrameLayout", "root");
        root.bounds = Bounds::new(0, 0, 100, 100);
        for id in ids {
            root.children.push(GuiNode::new("Button", *id));
        }
        root
    }

    fn state() -> SimState {
        let mut s = SimState::new();
        s.register_activity("a.A", tree(&["x", "y", "z"]));
        s.register_activity("a.B", tree(&[]));
        s.start_activity("a.A").unwrap();
        s
    }

    #[test]
    fn hashes_are_distinct() {
        let mut seen: Vec<u32> = (1..10_000).map(window_hash).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 9_999);
    }

    #[test]
    fn start_then_back_restores_top() {
        let mut s = state();
        let before = s.focused().cloned();
        s.start_activity("a.B").unwrap();
        assert_eq!(s.window_count(), 2);
        s.press(Keycode::Back);
        assert_eq!(s.focused().cloned(), before);
        s.press(Keycode::Back);
        assert_eq!(s.window_count(), 1);
    }

    #[test]
    fn start_topmost_is_idempotent() {
        let mut s = state();
        let snapshot: Vec<_> = s.windows().cloned().collect();
        s.start_activity("a.A").unwrap();
        assert_eq!(s.windows().cloned().collect::<Vec<_>>(), snapshot);
        assert_eq!(s.start_activity("nope"), Err(SimError::UnknownActivity));
    }

    #[test]
    fn raise_keeps_hash() {
        let mut s = state();
        let a = s.focused().unwrap().hash;
        s.start_activity("a.B").unwrap();
        s.start_activity("a.A").unwrap();
        assert_eq!(s.focused().unwrap().hash, a);
        assert_eq!(s.window_count(), 2);
    }

    #[test]
    fn arrows_walk_siblings() {
        let mut s = state();
        let focused = |s: &SimState| {
            let w = s.windows().next().unwrap();
            w.root.children.iter().position(|c| c.focused)
        };
        s.press(Keycode::Down);
        assert_eq!(focused(&s), Some(0));
        s.press(Keycode::Right);
        s.press(Keycode::Down);
        s.press(Keycode::Down);
        assert_eq!(focused(&s), Some(2));
        s.press(Keycode::Up);
        assert_eq!(focused(&s), Some(1));
        s.press(Keycode::Select);
        assert_eq!(s.key_log().len(), 6);
    }

    #[test]
    fn device_replies() {
        let mut s = state();
        let h = s.focused().unwrap().hash;
        assert_eq!(
            s.handle_device(&DeviceRequest::GetFocus),
            DeviceResponse::Single(Reply::OkPayload(format_hash(h)))
        );
        let r = s.handle_device(&DeviceRequest::DumpQ { window: h ^ 1, control: None, attr: None });
        assert_eq!(r, DeviceResponse::Single(Reply::Error("unknown window".into())));
        let r = s.handle_device(&DeviceRequest::DumpQ {
            window: h,
            control: Some("y".into()),
            attr: Some(crate::gui::Attribute::Name),
        });
        assert_eq!(r, DeviceResponse::Single(Reply::OkPayload("Button".into())));
        assert_eq!(SimState::new().handle_device(&DeviceRequest::GetFocus), DeviceResponse::Single(Reply::Error("no focus".into())));
    }
}
