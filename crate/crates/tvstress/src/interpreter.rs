//! Executes a parsed script against the device, agent and voice endpoints,
//! recording every wire exchange as a trace event.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use tvstress_core::agent_proto::{snapshot_from_payload, AgentRequest, QueryTarget};
use tvstress_core::gui::{
    get_control_item, get_focused_window, resolve_window, wait_ui_state, DeviceLink, GuiError, UiPredicate, WaitConfig,
};
use tvstress_core::monkey::{DeviceRequest, DeviceResponse, Keycode};
use tvstress_core::reply::Reply;
use tvstress_core::retry::{run_with_retry, AttemptError, RetryError};
use tvstress_core::script::{Expr, ForeachSource, Operand, ScriptAst, StatementKind};
use tvstress_core::value::{eval_expr, Bindings};
use tvstress_core::{
    replay_resource_state, Clock, ExecutionTrace, Interface, Outcome, ReleaseTarget, RetryPolicy, Value, Verdict,
};

use crate::agent::AgentClient;
use crate::clock::{unix_ms, SystemClock};
use crate::device::DeviceSession;
use crate::voice::{send_noisy_voice_cmd, send_voice_cmd, VoiceError, VoiceTimeouts};

/// `host:port` of each interface. A script that touches an interface with
/// no endpoint fails at that statement.
#[derive(Debug, Clone, Default)]
pub struct Endpoints {
    pub device: Option<String>,
    pub agent: Option<String>,
    pub voice: Option<String>,
}

#[derive(Clone)]
pub struct InterpreterConfig {
    pub endpoints: Endpoints,
    pub policy: RetryPolicy,
    pub connect_timeout: Duration,
    pub io_timeout: Duration,
    /// Base seed for `voice_noisy`; the n-th noisy command uses `seed + n`.
    pub noise_seed: u64,
    pub clock: Arc<dyn Clock>,
}

impl InterpreterConfig {
    pub fn new(endpoints: Endpoints) -> Self {
        InterpreterConfig {
            endpoints,
            policy: RetryPolicy::default(),
            connect_timeout: Duration::from_secs(2),
            io_timeout: Duration::from_secs(10),
            noise_seed: 0,
            clock: Arc::new(SystemClock::new()),
        }
    }
}

impl std::fmt::Debug for InterpreterConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InterpreterConfig")
            .field("endpoints", &self.endpoints)
            .field("policy", &self.policy)
            .field("connect_timeout", &self.connect_timeout)
            .field("io_timeout", &self.io_timeout)
            .field("noise_seed", &self.noise_seed)
            .finish_non_exhaustive()
    }
}

/// Why a statement stopped the run.
#[derive(Debug)]
struct Failure {
    reason: String,
    seq: Option<u64>,
}

type Step<T> = Result<T, Failure>;

/// Runs `ast` to completion or first failure. The trace is returned in
/// both cases, including any teardown events.
pub fn run_script(ast: &ScriptAst, cfg: &InterpreterConfig) -> (Verdict, ExecutionTrace) {
    let mut r = Runner {
        cfg,
        trace: ExecutionTrace::new(ast.source_name.clone(), unix_ms()),
        device: None,
        agent: None,
        env: Bindings::new(),
        produced_by: HashMap::new(),
        noisy_sent: 0,
    };
    let ends = match block_ends(ast) {
        Ok(e) => e,
        Err(line) => {
            r.trace.ended_at_ms = unix_ms();
            return (Verdict::failed("foreach without matching end", Some(line), None), r.trace);
        }
    };
    let verdict = match r.exec_range(ast, &ends, 0, ast.statements.len()) {
        Ok(()) => Verdict::passed(),
        Err((line, f)) => {
            r.teardown();
            Verdict::failed(f.reason, Some(line), f.seq)
        }
    };
    r.close();
    r.trace.ended_at_ms = unix_ms();
    (verdict, r.trace)
}

/// Index of the matching `end` for each `foreach`.
fn block_ends(ast: &ScriptAst) -> Result<HashMap<usize, usize>, usize> {
    let mut open = Vec::new();
    let mut ends = HashMap::new();
    for (i, s) in ast.statements.iter().enumerate() {
        match s.kind {
            StatementKind::Foreach { .. } => open.push(i),
            StatementKind::End => {
                let start = open.pop().ok_or(s.line)?;
                ends.insert(start, i);
            }
            _ => {}
        }
    }
    match open.pop() {
        Some(i) => Err(ast.statements[i].line),
        None => Ok(ends),
    }
}

fn expr_vars<'a>(e: &'a Expr, out: &mut Vec<&'a str>) {
    match e {
        Expr::Var(v) | Expr::Property { var: v, .. } => out.push(v),
        Expr::Index { list, index } => {
            out.push(list);
            expr_vars(index, out);
        }
        Expr::Eq(a, b) => {
            expr_vars(a, out);
            expr_vars(b, out);
        }
        Expr::Str(_) | Expr::Int(_) | Expr::List(_) => {}
    }
}

struct Runner<'c> {
    cfg: &'c InterpreterConfig,
    trace: ExecutionTrace,
    device: Option<DeviceSession>,
    agent: Option<AgentClient>,
    env: Bindings,
    /// Latest event seq whose result each variable was derived from.
    produced_by: HashMap<String, u64>,
    noisy_sent: u64,
}

impl Runner<'_> {
    fn fail(&self, reason: impl Into<String>) -> Failure {
        Failure {
            reason: reason.into(),
            seq: self.trace.last_seq(),
        }
    }

    fn bind(&mut self, name: &str, value: Value, seq: Option<u64>) {
        self.env.insert(name.to_string(), value);
        match seq {
            Some(s) => self.produced_by.insert(name.to_string(), s),
            None => self.produced_by.remove(name),
        };
    }

    fn exec_range(
        &mut self,
        ast: &ScriptAst,
        ends: &HashMap<usize, usize>,
        from: usize,
        to: usize,
    ) -> Result<(), (usize, Failure)> {
        let mut i = from;
        while i < to {
            let stmt = &ast.statements[i];
            if let StatementKind::Foreach { index, item, source } = &stmt.kind {
                let end = ends[&i];
                let items = self.foreach_items(source).map_err(|f| (stmt.line, f))?;
                for (n, v) in items.into_iter().enumerate() {
                    if let Some(idx) = index {
                        self.bind(idx, Value::Int(n as i64), None);
                    }
                    self.bind(item, v, None);
                    self.exec_range(ast, ends, i + 1, end)?;
                }
                i = end + 1;
                continue;
            }
            self.exec(&stmt.kind).map_err(|f| (stmt.line, f))?;
            i += 1;
        }
        Ok(())
    }

    fn foreach_items(&self, source: &ForeachSource) -> Step<Vec<Value>> {
        match source {
            ForeachSource::List(items) => Ok(items.iter().map(Value::from_literal).collect()),
            ForeachSource::Var(v) => match self.env.get(v) {
                Some(Value::List(items)) => Ok(items.clone()),
                Some(other) => Err(self.fail(format!("cannot iterate over `{v}`, a {}", other.type_name()))),
                None => Err(self.fail(format!("unbound variable `{v}`"))),
            },
        }
    }

    fn operand(&self, op: &Operand) -> Step<String> {
        match op {
            Operand::Str(s) => Ok(s.clone()),
            Operand::Var(v) => match self.env.get(v) {
                Some(Value::Str(s)) => Ok(s.clone()),
                Some(other) => Err(self.fail(format!("`{v}` is a {}, expected a string", other.type_name()))),
                None => Err(self.fail(format!("unbound variable `{v}`"))),
            },
        }
    }

    fn exec(&mut self, kind: &StatementKind) -> Step<()> {
        match kind {
            StatementKind::Connect => {
                self.device_command(&DeviceRequest::Ping)?;
                if self.cfg.endpoints.agent.is_some() {
                    self.agent_command(&AgentRequest::Ping)?;
                }
                Ok(())
            }
            StatementKind::StartActivity { activity } => {
                let name = self.operand(activity)?;
                self.device_command(&DeviceRequest::StartActivity(name))
            }
            StatementKind::Press { key } => {
                let k = Keycode::from_script_name(key).ok_or_else(|| self.fail(format!("unknown keycode {key:?}")))?;
                self.device_command(&DeviceRequest::Press(k))
            }
            StatementKind::ConsumeResource { resource, percentage } => {
                let req = AgentRequest::Consume { kind: *resource, percentage: *percentage };
                self.agent_command(&req).map(drop)
            }
            StatementKind::ReleaseResource { target } => self.agent_command(&AgentRequest::Release(*target)).map(drop),
            StatementKind::QueryResource { resource, into } => {
                let reply = self.agent_command(&AgentRequest::Query(QueryTarget::for_resource(*resource)))?;
                let snap = snapshot_from_payload(*resource, reply.payload().unwrap_or_default())
                    .map_err(|e| self.fail(format!("agent: {e}")))?;
                let seq = self.trace.last_seq();
                self.bind(into, Value::Snapshot(snap), seq);
                Ok(())
            }
            StatementKind::Voice { text } => {
                let text = self.operand(text)?;
                self.voice_command(&text, None)
            }
            StatementKind::VoiceNoisy { text, snr_db } => {
                let text = self.operand(text)?;
                self.voice_command(&text, Some(*snr_db))
            }
            StatementKind::WaitUi { level, subject, condition, timeout_ms, poll_ms } => {
                let pred = UiPredicate::new(*level, subject.clone(), *condition).ok_or_else(|| {
                    self.fail(format!("`{}` cannot be waited on at {} level", condition.keyword(), level.keyword()))
                })?;
                let wait = match poll_ms {
                    Some(p) => WaitConfig::new(*timeout_ms, *p),
                    None => WaitConfig::with_timeout(*timeout_ms),
                }
                .ok_or_else(|| self.fail("wait_ui needs 0 < poll <= timeout"))?;
                let clock = self.cfg.clock.clone();
                let r = wait_ui_state(&mut self.traced_device(), &*clock, &pred, &wait);
                r.map(drop).map_err(|e| self.gui_failure(e))
            }
            StatementKind::FocusedWindow { into } => {
                let w = get_focused_window(&mut self.traced_device()).map_err(|e| self.gui_failure(e))?;
                let seq = self.trace.last_seq();
                self.bind(into, Value::Window(w), seq);
                Ok(())
            }
            StatementKind::GetControl { window, control, into } => {
                let (window, control) = (self.operand(window)?, self.operand(control)?);
                let now = self.cfg.clock.now_ms();
                let mut link = self.traced_device();
                let r = resolve_window(&mut link, &window).and_then(|w| get_control_item(&mut link, &w, &control, now));
                let handle = r.map_err(|e| self.gui_failure(e))?;
                let seq = self.trace.last_seq();
                self.bind(into, Value::Control(handle), seq);
                Ok(())
            }
            StatementKind::GetAttribute { handle, attr, into } => {
                let v = match self.env.get(handle) {
                    Some(Value::Control(c)) => c.attribute(*attr),
                    Some(other) => {
                        return Err(self.fail(format!("`{handle}` is a {}, not a control handle", other.type_name())))
                    }
                    None => return Err(self.fail(format!("unbound variable `{handle}`"))),
                };
                let seq = self.produced_by.get(handle).copied();
                self.bind(into, v, seq);
                Ok(())
            }
            StatementKind::Assert { condition } => self.assert(condition),
            StatementKind::Sleep { millis } => {
                self.cfg.clock.sleep_ms(*millis);
                Ok(())
            }
            StatementKind::Let { name, value } => {
                self.bind(name, Value::from_literal(value), None);
                Ok(())
            }
            StatementKind::Foreach { .. } | StatementKind::End => Ok(()),
        }
    }

    fn assert(&self, condition: &Expr) -> Step<()> {
        let mut vars = Vec::new();
        expr_vars(condition, &mut vars);
        let seq = vars
            .iter()
            .filter_map(|v| self.produced_by.get(*v).copied())
            .max()
            .or(self.trace.last_seq());
        let fail = |reason: String| Failure { reason, seq };
        match eval_expr(condition, &self.env) {
            Ok(v) if v.is_truthy() => Ok(()),
            Ok(_) => {
                let detail = match condition {
                    Expr::Eq(a, b) => match (eval_expr(a, &self.env), eval_expr(b, &self.env)) {
                        (Ok(x), Ok(y)) => format!(" ({x:?} != {y:?})", x = x.to_string(), y = y.to_string()),
                        _ => String::new(),
                    },
                    _ => String::new(),
                };
                Err(fail(format!("assertion failed: {condition}{detail}")))
            }
            Err(e) => Err(fail(format!("assertion error: {e}"))),
        }
    }

    fn gui_failure(&self, e: GuiError<String>) -> Failure {
        let reason = match e {
            GuiError::Link(m) => m,
            other => format!("device: {other}"),
        };
        self.fail(reason)
    }

    fn traced_device(&mut self) -> TracedDevice<'_> {
        TracedDevice {
            trace: &mut self.trace,
            session: &mut self.device,
            cfg: self.cfg,
        }
    }

    /// A device command whose reply must be `OK`.
    fn device_command(&mut self, req: &DeviceRequest) -> Step<()> {
        match self.traced_device().exchange(req) {
            Ok(DeviceResponse::Single(Reply::Error(m))) => Err(self.fail(format!("device: {} rejected: {m}", req.command_name()))),
            Ok(_) => Ok(()),
            Err(m) => Err(self.fail(m)),
        }
    }

    /// One agent exchange, logged as one event. Transport faults drop the
    /// session and are transient; malformed replies are fatal.
    fn agent_attempt(&mut self, req: &AgentRequest) -> Result<Reply, AttemptError<String>> {
        let seq = self.trace.issue(Interface::Agent, req.command_name(), req.args());
        let cfg = self.cfg;
        let endpoint = cfg.endpoints.agent.as_deref().unwrap_or_default();
        let result = match self.agent.as_mut() {
            Some(c) => c.request(req),
            None => AgentClient::open(endpoint, cfg.connect_timeout, cfg.io_timeout)
                .and_then(|c| self.agent.insert(c).request(req)),
        };
        match result {
            Ok(reply) => {
                let outcome = match &reply {
                    Reply::Error(m) => Outcome::Error(m.clone()),
                    ok => Outcome::Ok(ok.payload().unwrap_or_default().to_string()),
                };
                let _ = self.trace.resolve(seq, outcome);
                Ok(reply)
            }
            Err(e) => {
                let msg = e.to_string();
                let _ = self.trace.resolve(seq, Outcome::Error(msg.clone()));
                if e.is_transport() {
                    if let Some(c) = self.agent.take() {
                        c.close();
                    }
                    Err(AttemptError::Transient(msg))
                } else {
                    Err(AttemptError::Fatal(format!("agent: {msg}")))
                }
            }
        }
    }

    fn agent_ok(&mut self, req: &AgentRequest) -> Result<Reply, AttemptError<String>> {
        match self.agent_attempt(req)? {
            Reply::Error(m) => Err(AttemptError::Fatal(format!("agent: {} rejected: {m}", req.command_name()))),
            reply => Ok(reply),
        }
    }

    /// Sends an agent command. On a transport fault the agent is reset and
    /// every target still in force is re-issued before the command is sent
    /// again. Targets are computed once, at the time of the fault.
    fn agent_command(&mut self, req: &AgentRequest) -> Step<Reply> {
        if self.cfg.endpoints.agent.is_none() {
            return Err(self.fail("no agent endpoint configured"));
        }
        let mut replay = None;
        let policy = self.cfg.policy;
        let clock = self.cfg.clock.clone();
        let r = run_with_retry(&policy, |ms| clock.sleep_ms(ms), |attempt| {
            if attempt > 1 {
                let targets = replay.get_or_insert_with(|| replay_resource_state(&self.trace.events)).clone();
                self.agent_ok(&AgentRequest::Reset)?;
                for t in &targets {
                    self.agent_ok(&AgentRequest::consume(t))?;
                }
            }
            self.agent_ok(req)
        });
        match r {
            Ok((reply, _)) => Ok(reply),
            Err(RetryError::Exhausted { attempts, last }) => {
                Err(self.fail(format!("agent unreachable after {attempts} attempts: {last}")))
            }
            Err(RetryError::Fatal { error, .. }) => Err(self.fail(error)),
        }
    }

    fn voice_command(&mut self, text: &str, snr_db: Option<i64>) -> Step<()> {
        let Some(endpoint) = self.cfg.endpoints.voice.clone() else {
            return Err(self.fail("no voice endpoint configured"));
        };
        let t = VoiceTimeouts { connect: self.cfg.connect_timeout, io: self.cfg.io_timeout };
        let (command, args, seed) = match snr_db {
            None => ("VOICE", vec![text.to_string()], 0),
            Some(snr) => {
                let seed = self.cfg.noise_seed.wrapping_add(self.noisy_sent);
                self.noisy_sent += 1;
                ("VOICE_NOISY", vec![text.to_string(), snr.to_string()], seed)
            }
        };
        let policy = self.cfg.policy;
        let clock = self.cfg.clock.clone();
        let r = run_with_retry(&policy, |ms| clock.sleep_ms(ms), |_| {
            let seq = self.trace.issue(Interface::Voice, command, args.clone());
            let r = match snr_db {
                None => send_voice_cmd(&endpoint, text, t),
                Some(snr) => send_noisy_voice_cmd(&endpoint, text, snr as f64, seed, t),
            };
            match r {
                Ok(Reply::Error(m)) => {
                    let _ = self.trace.resolve(seq, Outcome::Error(m.clone()));
                    Err(AttemptError::Fatal(format!("voice: {text:?} rejected: {m}")))
                }
                Ok(reply) => {
                    let _ = self.trace.resolve(seq, Outcome::Ok(reply.payload().unwrap_or_default().to_string()));
                    Ok(())
                }
                Err(e) => {
                    let _ = self.trace.resolve(seq, Outcome::Error(e.to_string()));
                    match e {
                        VoiceError::Transport(_) => Err(AttemptError::Transient(format!("voice: {e}"))),
                        e => Err(AttemptError::Fatal(format!("voice: {e}"))),
                    }
                }
            }
        });
        match r {
            Ok(_) => Ok(()),
            Err(RetryError::Exhausted { attempts, last }) => {
                Err(self.fail(format!("voice unreachable after {attempts} attempts: {last}")))
            }
            Err(RetryError::Fatal { error, .. }) => Err(self.fail(error)),
        }
    }

    /// On failure, load must not outlive the script.
    fn teardown(&mut self) {
        if self.agent.is_some() {
            let _ = self.agent_attempt(&AgentRequest::Release(ReleaseTarget::All));
        }
    }

    fn close(&mut self) {
        if let Some(d) = self.device.take() {
            d.close();
        }
        if let Some(a) = self.agent.take() {
            a.close();
        }
    }
}

/// A device link that logs each exchange as a trace event and re-sends
/// over a fresh connection on transport faults.
struct TracedDevice<'a> {
    trace: &'a mut ExecutionTrace,
    session: &'a mut Option<DeviceSession>,
    cfg: &'a InterpreterConfig,
}

impl DeviceLink for TracedDevice<'_> {
    type Error = String;

    fn exchange(&mut self, req: &DeviceRequest) -> Result<DeviceResponse, String> {
        let Some(endpoint) = self.cfg.endpoints.device.as_deref() else {
            return Err("no device endpoint configured".into());
        };
        let clock = self.cfg.clock.clone();
        let r = run_with_retry(&self.cfg.policy, |ms| clock.sleep_ms(ms), |_| {
            let seq = self.trace.issue(Interface::Device, req.command_name(), req.args());
            let result = match self.session.as_mut() {
                Some(s) => s.request(req),
                None => DeviceSession::open(endpoint, self.cfg.connect_timeout, self.cfg.io_timeout)
                    .and_then(|s| self.session.insert(s).request(req)),
            };
            match result {
                Ok(resp) => {
                    let outcome = match &resp {
                        DeviceResponse::Single(Reply::Error(m)) => Outcome::Error(m.clone()),
                        DeviceResponse::Single(ok) => Outcome::Ok(ok.payload().unwrap_or_default().to_string()),
                        DeviceResponse::Lines(lines) => Outcome::Ok(lines.join("\n")),
                    };
                    let _ = self.trace.resolve(seq, outcome);
                    Ok(resp)
                }
                Err(e) => {
                    let _ = self.trace.resolve(seq, Outcome::Error(e.to_string()));
                    if e.is_transport() {
                        *self.session = None;
                        Err(AttemptError::Transient(e.to_string()))
                    } else {
                        Err(AttemptError::Fatal(e.to_string()))
                    }
                }
            }
        });
        match r {
            Ok((resp, _)) => Ok(resp),
            Err(RetryError::Exhausted { attempts, last }) => {
                Err(format!("device unreachable after {attempts} attempts: {last}"))
            }
            Err(RetryError::Fatal { error, .. }) => Err(error),
        }
    }
}
