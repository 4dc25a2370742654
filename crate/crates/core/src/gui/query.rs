//! High-level GUI operations composed from primitive device commands.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{dumpq, parse_hash, Attribute, Condition, ControlHandle, GuiNode, QueryLevel, UiPredicate, WaitConfig, WaitLevel, WindowHandle};
use crate::clock::Clock;
use crate::monkey::{DeviceRequest, DeviceResponse};
use crate::reply::Reply;

/// One request/response exchange with the device.
pub trait DeviceLink {
    type Error;
    fn exchange(&mut self, req: &DeviceRequest) -> Result<DeviceResponse, Self::Error>;
}

impl<L: DeviceLink + ?Sized> DeviceLink for &mut L {
    type Error = L::Error;
    fn exchange(&mut self, req: &DeviceRequest) -> Result<DeviceResponse, Self::Error> {
        (**self).exchange(req)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GuiError<E> {
    #[error("device link: {0}")]
    Link(E),
    #[error("device error: {0}")]
    Device(String),
    #[error("malformed device response: {0}")]
    Malformed(String),
    #[error("device reports no focused window")]
    NoFocus,
    #[error("focused window {0:08X} is not in the window list")]
    HashNotListed(u32),
    #[error("control {control:?} not found in window {window}")]
    ControlNotFound { window: String, control: String },
    #[error("window {0:?} is gone")]
    WindowGone(String),
    #[error("no such subject {0:?}")]
    SubjectNotFound(String),
    #[error("UI state not reached after {elapsed_ms} ms ({queries} queries)")]
    TimeoutExpired { elapsed_ms: u64, queries: u64 },
}

type GResult<T, E> = Result<T, GuiError<E>>;

fn exchange<L: DeviceLink>(link: &mut L, req: &DeviceRequest) -> GResult<DeviceResponse, L::Error> {
    link.exchange(req).map_err(GuiError::Link)
}

fn single<L: DeviceLink>(link: &mut L, req: &DeviceRequest) -> GResult<(Reply, usize), L::Error> {
    match exchange(link, req)? {
        r @ DeviceResponse::Single(_) => {
            let n = r.encoded_len();
            let DeviceResponse::Single(reply) = r else { unreachable!() };
            match reply {
                Reply::Error(m) => Err(GuiError::Device(m)),
                ok => Ok((ok, n)),
            }
        }
        DeviceResponse::Lines(_) => Err(GuiError::Malformed("unexpected multi-line reply".into())),
    }
}

fn lines<L: DeviceLink>(link: &mut L, req: &DeviceRequest) -> GResult<(Vec<String>, usize), L::Error> {
    match exchange(link, req)? {
        DeviceResponse::Single(Reply::Error(m)) => Err(GuiError::Device(m)),
        DeviceResponse::Single(other) => Err(GuiError::Malformed(other.to_string())),
        r @ DeviceResponse::Lines(_) => {
            let n = r.encoded_len();
            let DeviceResponse::Lines(l) = r else { unreachable!() };
            Ok((l, n))
        }
    }
}

fn focus_hash<L: DeviceLink>(link: &mut L) -> GResult<(Option<u32>, usize), L::Error> {
    match single(link, &DeviceRequest::GetFocus) {
        Ok((Reply::OkPayload(h), n)) => parse_hash(&h)
            .map(|h| (Some(h), n))
            .ok_or(GuiError::Malformed(h)),
        Ok((other, _)) => Err(GuiError::Malformed(other.to_string())),
        Err(GuiError::Device(m)) if m == "no focus" => Ok((None, "ERROR:no focus\n".len())),
        Err(e) => Err(e),
    }
}

fn list_with_len<L: DeviceLink>(link: &mut L) -> GResult<(Vec<WindowHandle>, usize), L::Error> {
    let (raw, n) = lines(link, &DeviceRequest::ListWindows)?;
    let windows = raw
        .iter()
        .map(|l| WindowHandle::parse_list_line(l).ok_or_else(|| GuiError::Malformed(l.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((windows, n))
}

/// Live windows, topmost first.
pub fn list_windows<L: DeviceLink>(link: &mut L) -> GResult<Vec<WindowHandle>, L::Error> {
    list_with_len(link).map(|(w, _)| w)
}

/// Asks for the focus hash, lists the windows, and returns the entry whose
/// hash matches.
pub fn get_focused_window<L: DeviceLink>(link: &mut L) -> GResult<WindowHandle, L::Error> {
    let hash = focus_hash(link)?.0.ok_or(GuiError::NoFocus)?;
    list_windows(link)?
        .into_iter()
        .find(|w| w.hash == hash)
        .ok_or(GuiError::HashNotListed(hash))
}

fn pick_window(windows: Vec<WindowHandle>, id: &str) -> Option<WindowHandle> {
    if let Some(h) = parse_hash(id) {
        if let Some(w) = windows.iter().find(|w| w.hash == h) {
            return Some(w.clone());
        }
    }
    // Topmost wins when names collide.
    windows.into_iter().find(|w| w.name == id)
}

/// Finds a live window by 8-digit hash or by name.
pub fn resolve_window<L: DeviceLink>(link: &mut L, id: &str) -> GResult<WindowHandle, L::Error> {
    pick_window(list_windows(link)?, id).ok_or_else(|| GuiError::WindowGone(id.to_string()))
}

fn dump_window<L: DeviceLink>(link: &mut L, window: &WindowHandle) -> GResult<(GuiNode, usize), L::Error> {
    let req = DeviceRequest::DumpQ { window: window.hash, control: None, attr: None };
    let (raw, n) = match lines(link, &req) {
        Err(GuiError::Device(m)) if m.starts_with("unknown window") => {
            return Err(GuiError::WindowGone(window.name.clone()))
        }
        other => other?,
    };
    let tree = dumpq::parse_tree(&raw).map_err(|e| GuiError::Malformed(e.to_string()))?;
    Ok((tree, n))
}

/// Dumps the window's control tree and searches it depth-first.
pub fn get_control_item<L: DeviceLink>(
    link: &mut L,
    window: &WindowHandle,
    control_id: &str,
    now_ms: u64,
) -> GResult<ControlHandle, L::Error> {
    let (tree, _) = dump_window(link, window)?;
    let node = tree.find(control_id).ok_or_else(|| GuiError::ControlNotFound {
        window: window.name.clone(),
        control: control_id.to_string(),
    })?;
    Ok(ControlHandle {
        window: window.clone(),
        node: node.clone(),
        fetched_at_ms: now_ms,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateSummary {
    System { windows: Vec<WindowHandle>, focus: Option<u32> },
    App { windows: Vec<WindowHandle> },
    Window { window: WindowHandle, tree: GuiNode },
    Control { window: WindowHandle, node: GuiNode },
    Property { value: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub summary: StateSummary,
    /// Bytes of the level-specific response (window resolution excluded).
    pub payload_bytes: usize,
}

fn belongs_to_app(window: &str, app: &str) -> bool {
    window == app || window.strip_prefix(app).is_some_and(|rest| rest.starts_with('.'))
}

fn not_found<E>(e: GuiError<E>, subject: &str) -> GuiError<E> {
    match e {
        GuiError::Device(m) if m.starts_with("unknown") => GuiError::SubjectNotFound(subject.to_string()),
        GuiError::WindowGone(_) => GuiError::SubjectNotFound(subject.to_string()),
        other => other,
    }
}

/// Queries device state at one of five granularities. Subjects: `system`
/// ignores it; `app` takes a package prefix; `window` a name or hash;
/// `control` `<window>/<controlId>`; `property` `<window>/<controlId>/<attr>`.
pub fn query_state<L: DeviceLink>(link: &mut L, level: QueryLevel, subject: &str) -> GResult<QueryResult, L::Error> {
    let missing = || GuiError::SubjectNotFound(subject.to_string());
    match level {
        QueryLevel::System => {
            let (focus, a) = focus_hash(link)?;
            let (windows, b) = list_with_len(link)?;
            Ok(QueryResult { summary: StateSummary::System { windows, focus }, payload_bytes: a + b })
        }
        QueryLevel::App => {
            let (windows, n) = list_with_len(link)?;
            let windows: Vec<_> = windows.into_iter().filter(|w| belongs_to_app(&w.name, subject)).collect();
            if windows.is_empty() {
                return Err(missing());
            }
            Ok(QueryResult { summary: StateSummary::App { windows }, payload_bytes: n })
        }
        QueryLevel::Window => {
            let window = resolve_window(link, subject).map_err(|e| not_found(e, subject))?;
            let (tree, n) = dump_window(link, &window).map_err(|e| not_found(e, subject))?;
            Ok(QueryResult { summary: StateSummary::Window { window, tree }, payload_bytes: n })
        }
        QueryLevel::Control => {
            let parts: Vec<&str> = subject.split('/').collect();
            let [w, c] = parts[..] else { return Err(missing()) };
            let window = resolve_window(link, w).map_err(|e| not_found(e, subject))?;
            let req = DeviceRequest::DumpQ { window: window.hash, control: Some(c.to_string()), attr: None };
            let (raw, n) = lines(link, &req).map_err(|e| not_found(e, subject))?;
            let node = dumpq::parse_tree(&raw).map_err(|e| GuiError::Malformed(e.to_string()))?;
            Ok(QueryResult { summary: StateSummary::Control { window, node }, payload_bytes: n })
        }
        QueryLevel::Property => {
            let parts: Vec<&str> = subject.split('/').collect();
            let [w, c, a] = parts[..] else { return Err(missing()) };
            let attr = Attribute::from_keyword(a).ok_or_else(missing)?;
            let window = resolve_window(link, w).map_err(|e| not_found(e, subject))?;
            let req = DeviceRequest::DumpQ { window: window.hash, control: Some(c.to_string()), attr: Some(attr) };
            let (reply, n) = single(link, &req).map_err(|e| not_found(e, subject))?;
            let value = reply.payload().unwrap_or_default().to_string();
            Ok(QueryResult { summary: StateSummary::Property { value }, payload_bytes: n })
        }
    }
}

/// Evaluates a predicate once. A subject that does not exist makes the
/// predicate false rather than failing.
pub fn check_predicate<L: DeviceLink>(link: &mut L, pred: &UiPredicate) -> GResult<bool, L::Error> {
    let absent = |r: GResult<bool, L::Error>| match r {
        Err(GuiError::SubjectNotFound(_) | GuiError::WindowGone(_) | GuiError::ControlNotFound { .. }) => Ok(false),
        other => other,
    };
    match pred.level {
        WaitLevel::System => {
            let q = query_state(link, QueryLevel::System, &pred.subject)?;
            let StateSummary::System { windows, .. } = q.summary else { unreachable!() };
            Ok(pick_window(windows, &pred.subject).is_some())
        }
        WaitLevel::App => absent(query_state(link, QueryLevel::App, &pred.subject).map(|_| true)),
        WaitLevel::Window => absent((|| match pred.condition {
            Condition::Focused => match get_focused_window(link) {
                Ok(w) => Ok(w.name == pred.subject || parse_hash(&pred.subject) == Some(w.hash)),
                Err(GuiError::NoFocus) => Ok(false),
                Err(e) => Err(e),
            },
            cond => {
                let q = query_state(link, QueryLevel::Window, &pred.subject)?;
                let StateSummary::Window { tree, .. } = q.summary else { unreachable!() };
                Ok(cond == Condition::Exists || tree.visible)
            }
        })()),
        WaitLevel::Control => absent((|| {
            let q = query_state(link, QueryLevel::Control, &pred.subject)?;
            let StateSummary::Control { node, .. } = q.summary else { unreachable!() };
            Ok(match pred.condition {
                Condition::Exists => true,
                Condition::Visible => node.visible,
                Condition::Focused => node.focused,
            })
        })()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaitOutcome {
    pub elapsed_ms: u64,
    pub queries: u64,
}

/// Polls `check_predicate` every `cfg.poll_ms` until it holds or the
/// timeout passes. The final poll happens exactly at the timeout.
pub fn wait_ui_state<L: DeviceLink, C: Clock + ?Sized>(
    link: &mut L,
    clock: &C,
    pred: &UiPredicate,
    cfg: &WaitConfig,
) -> GResult<WaitOutcome, L::Error> {
    let start = clock.now_ms();
    let mut queries = 0;
    loop {
        queries += 1;
        let holds = check_predicate(link, pred)?;
        let elapsed_ms = clock.now_ms().saturating_sub(start);
        if holds {
            return Ok(WaitOutcome { elapsed_ms, queries });
        }
        if elapsed_ms >= cfg.timeout_ms() {
            return Err(GuiError::TimeoutExpired { elapsed_ms, queries });
        }
        clock.sleep_ms(cfg.poll_ms().min(cfg.timeout_ms() - elapsed_ms));
    }
}
