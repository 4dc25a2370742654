//! Acceptance run: every criterion at its stated tolerance, one PASS/FAIL
//! line each. Criteria run one after another since several generate load.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;
use tvstress::agent::{dir_bytes, Agent, AgentClient, AgentConfig, AgentServer};
use tvstress::interpreter::{run_script, Endpoints};
use tvstress::sim_server::{SimServer, SimServerConfig};
use tvstress_core::agent_proto::{parse_calibration, parse_targets, AgentRequest, CalibrationKind, QueryTarget};
use tvstress_core::gui::{
    get_focused_window, parse_hash, parse_tree, serialize_tree, tree_lines, wait_ui_state, Attribute, Bounds,
    Condition, DeviceLink, GuiError, GuiNode, UiPredicate, WaitConfig, WaitLevel,
};
use tvstress_core::load::{idle_ms, role_split, worker_count, DutyCycle, WorkerRole};
use tvstress_core::monkey::{DeviceRequest, DeviceResponse, Keycode, ResponseAssembler};
use tvstress_core::reply::Reply;
use tvstress_core::sim::{parse_scenario, FaultPlan, SimState};
use tvstress_core::voice::{
    mix_noise, recognize, synthesize, AudioStream, NoiseSpec, VoiceFrame, ALPHABET, SAMPLE_RATE,
};
use tvstress_core::{
    replay_resource_state, Event, Interface, LoadTarget, Outcome, Percentage, ReleaseTarget, ResourceKind,
    VerdictStatus, VirtualClock,
};

type Check = Result<(), String>;
type Criterion = (u32, &'static str, u64, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($msg)+));
        }
    };
}

fn pct(p: i64) -> Percentage {
    Percentage::new(p).unwrap()
}

// 1. Voice-launch script end to end.
fn voice_launch_end_to_end() -> Check {
    let rig = Rig::start(FaultPlan::none());
    let (verdict, trace) = run_script(&script(VOICE_LAUNCH), &rig.config());
    ensure!(verdict.is_passed(), "verdict {verdict:?}");
    let agent_cmd = |cmd: &str| {
        trace.events.iter().filter(|e| e.interface == Interface::Agent && e.command == cmd).collect::<Vec<_>>()
    };
    let consumes = agent_cmd("CONSUME");
    ensure!(consumes.len() == 3, "{} consume events", consumes.len());
    ensure!(consumes.iter().all(|e| e.args[1] == "90"), "consume args {:?}", consumes);
    let releases = agent_cmd("RELEASE");
    ensure!(releases.len() == 3, "{} release events", releases.len());
    let voices: Vec<usize> = trace
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.interface == Interface::Voice)
        .map(|(i, _)| i)
        .collect();
    ensure!(voices.len() == 5, "{} voice events", voices.len());
    for &i in &voices {
        let e = &trace.events[i];
        ensure!(matches!(e.outcome, Outcome::Ok(_)), "voice event {} failed: {:?}", e.seq, e.outcome);
        let next: Vec<&str> = trace.events[i + 1..i + 3].iter().map(|e| e.command.as_str()).collect();
        ensure!(next == ["GETFOCUS", "LISTWINDOWS"], "after voice {}: {next:?}", e.seq);
    }
    ensure!(trace.events.iter().all(|e| !e.outcome.is_error()), "error events in trace");
    Ok(())
}

// 2. CPU duty cycle.
fn cpu_duty_cycle() -> Check {
    for p in 1..=99u32 {
        let idle = idle_ms(p as f64);
        // 10 (100 - p) / p, checked as the cross-multiplied identity.
        ensure!((idle * p as f64 - 10.0 * (100 - p) as f64).abs() < 1e-9, "idle_ms({p}) = {idle}");
        let d = DutyCycle::for_percent(p as f64).unwrap();
        ensure!(d.busy_ms == 10.0 && d.idle_ms == idle, "duty cycle for {p}: {d:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let mut agent = Agent::new(agent_config(dir.path(), None)).unwrap();
    for p in [30, 50, 70, 90] {
        agent.consume(ResourceKind::Cpu, pct(p)).map_err(|e| e.to_string())?;
        let workers = agent.cpu_workers() as f64;
        std::thread::sleep(Duration::from_millis(300));
        let counters = agent.counters();
        let (t0, b0) = (Instant::now(), counters.cpu_busy_ns.load(Ordering::Relaxed));
        std::thread::sleep(Duration::from_secs(5));
        let (t1, b1) = (Instant::now(), counters.cpu_busy_ns.load(Ordering::Relaxed));
        agent.release(ReleaseTarget::Kind(ResourceKind::Cpu));
        let busy = (b1 - b0) as f64 / ((t1 - t0).as_nanos() as f64 * workers) * 100.0;
        println!("    cpu target {p}% -> worker busy {busy:.1}%");
        ensure!((busy - p as f64).abs() <= 10.0, "target {p}%: busy fraction {busy:.1}%");
    }
    Ok(())
}

// 3. Worker-count arithmetic and role split.
fn worker_arithmetic() -> Check {
    for max in 1..=64u32 {
        for p in 0..=100i64 {
            // floor by counting: the largest n with 100 n <= max p.
            let mut oracle = 0u32;
            while (oracle as i64 + 1) * 100 <= max as i64 * p {
                oracle += 1;
            }
            let got = worker_count(max, pct(p));
            ensure!(got == oracle, "worker_count({max}, {p}) = {got}, expected {oracle}");
        }
    }
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..1000 {
        let max = rng.random_range(1..=64u32);
        let n = worker_count(max, pct(rng.random_range(0..=100)));
        let senders = (0..n).filter(|i| WorkerRole::for_index(*i) == WorkerRole::Sender).count() as u32;
        let receivers = (0..n).filter(|i| i % 2 == 1).count() as u32;
        ensure!(role_split(n) == (senders, n - senders), "role_split({n}) = {:?}", role_split(n));
        ensure!(n - senders == receivers, "receivers for {n}");
        ensure!((0..n).all(|i| (WorkerRole::for_index(i) == WorkerRole::Sender) == (i % 2 == 0)), "parity for {n}");
    }
    Ok(())
}

// 4. Network calibration against a service where four workers saturate.
fn network_calibration() -> Check {
    const PER_CONN: u64 = 2 << 20;
    let mut found = Vec::new();
    for _ in 0..5 {
        let data = data_service(PER_CONN, 4 * PER_CONN);
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = agent_config(dir.path(), Some(&data));
        cfg.calibration_window = Duration::from_millis(500);
        let server = AgentServer::start(cfg).map_err(|e| e.to_string())?;
        let mut client =
            AgentClient::connect(&server.local_addr().to_string(), Duration::from_secs(1), Duration::from_secs(10))
                .map_err(|e| e.to_string())?;
        let reply = client.request(&AgentRequest::Calibrate(CalibrationKind::Network)).map_err(|e| e.to_string())?;
        client.close();
        server.shutdown();
        data.shutdown();
        let r = match reply {
            Reply::Error(m) => return Err(format!("calibration error: {m}")),
            ok => parse_calibration(ok.payload().unwrap()).map_err(|e| e.to_string())?,
        };
        found.push(r.max_workers);
    }
    println!("    calibrated worker counts {found:?}");
    ensure!(found.iter().all(|n| n.abs_diff(4) <= 1), "counts {found:?}");
    Ok(())
}

// 5. Agent restart replay and bounded device retries.
fn fault_tolerance() -> Check {
    let rig = Rig::start(FaultPlan::none());
    let addr = rig.agent.local_addr();
    let quota = rig.dir.path().to_path_buf();
    let data = rig.data.local_addr().to_string();
    let cfg = rig.config();
    let Rig { sim, agent, data: data_svc, dir: _dir } = rig;
    let text = "consume cpu 90\nconsume network 40\nsleep 1500\nquery cpu -> c\n";
    let ast = script(text);
    let runner = std::thread::spawn(move || run_script(&ast, &cfg));
    let deadline = Instant::now() + Duration::from_secs(10);
    while agent.agent().lock().unwrap().targets().len() < 2 {
        ensure!(Instant::now() < deadline, "consume events never reached the agent");
        std::thread::sleep(Duration::from_millis(20));
    }
    agent.shutdown();
    let mut restarted_cfg = AgentConfig::new(addr.to_string(), quota);
    restarted_cfg.memory_budget_bytes = 32 << 20;
    restarted_cfg.data_service = Some(data);
    restarted_cfg.preset = RIG_PRESET;
    let restarted = AgentServer::start(restarted_cfg).map_err(|e| e.to_string())?;
    let (verdict, trace) = runner.join().unwrap();
    ensure!(verdict.is_passed(), "verdict {verdict:?}\n{}", trace.to_tsv());
    let expected = replay_resource_state(&trace.events);
    let mut client = AgentClient::connect(&addr.to_string(), Duration::from_secs(1), Duration::from_secs(5))
        .map_err(|e| e.to_string())?;
    let reply = client.request(&AgentRequest::Query(QueryTarget::Targets)).map_err(|e| e.to_string())?;
    client.close();
    let live = parse_targets(reply.payload().unwrap_or_default()).map_err(|e| e.to_string())?;
    ensure!(
        expected == vec![LoadTarget::active(ResourceKind::Cpu, pct(90)), LoadTarget::active(ResourceKind::Network, pct(40))],
        "replay {expected:?}"
    );
    ensure!(live == expected, "agent holds {live:?}, replay says {expected:?}");
    ensure!(trace.events.iter().any(|e| e.command == "RESET"), "no RESET in recovery");
    restarted.shutdown();
    data_svc.shutdown();
    drop(sim);

    let sim = SimServer::start(
        media_center(),
        &SimServerConfig { faults: FaultPlan::drop_every_connection_after(0), ..SimServerConfig::loopback() },
    )
    .map_err(|e| e.to_string())?;
    let cfg = fast_config(Endpoints { device: Some(sim.device_addr().to_string()), ..Endpoints::default() });
    let (verdict, trace) = run_script(&script("press HOME\n"), &cfg);
    let attempts = trace.events.iter().filter(|e| e.command == "PRESS").count();
    let (accepted, drops) = sim.device_fault_counts();
    ensure!(verdict.status() == VerdictStatus::Failed, "verdict {verdict:?}");
    ensure!(attempts == 3 && accepted == 3 && drops == 3, "attempts {attempts}, accepted {accepted}, drops {drops}");
    ensure!(trace.events.iter().all(|e| e.outcome.is_error()), "{}", trace.to_tsv());
    Ok(())
}

fn random_event(rng: &mut StdRng, seq: u64) -> Event {
    let kinds = ResourceKind::ALL;
    let kind = kinds[rng.random_range(0..kinds.len())];
    let (interface, command, args): (Interface, &str, Vec<String>) = match rng.random_range(0..10) {
        0..=3 => (Interface::Agent, "CONSUME", vec![kind.wire_token().into(), rng.random_range(0..=100).to_string()]),
        4..=5 => (Interface::Agent, "RELEASE", vec![kind.wire_token().into()]),
        6 => (Interface::Agent, "RELEASE", vec!["ALL".into()]),
        7 => (Interface::Agent, if rng.random_bool(0.5) { "RESET" } else { "PING" }, vec![]),
        8 => (Interface::Voice, "VOICE", vec!["channel 4".into()]),
        _ => (Interface::Device, "CONSUME", vec![kind.wire_token().into(), "50".into()]),
    };
    let mut e = Event::new(seq, interface, command, args);
    e.outcome = if rng.random_bool(0.15) { Outcome::Error("x".into()) } else { Outcome::Ok(String::new()) };
    e
}

/// Left fold over the log into an insertion-ordered dictionary.
fn replay_oracle(events: &[Event]) -> Vec<(ResourceKind, u8)> {
    let mut order: Vec<ResourceKind> = Vec::new();
    let mut level: BTreeMap<&'static str, u8> = BTreeMap::new();
    for e in events {
        if e.interface != Interface::Agent || matches!(e.outcome, Outcome::Error(_)) {
            continue;
        }
        match e.command.as_str() {
            "CONSUME" => {
                let kind = ResourceKind::from_wire_token(&e.args[0]).unwrap();
                if level.insert(kind.wire_token(), e.args[1].parse().unwrap()).is_none() {
                    order.push(kind);
                }
            }
            "RELEASE" if e.args[0] == "ALL" => {
                order.clear();
                level.clear();
            }
            "RELEASE" => {
                let kind = ResourceKind::from_wire_token(&e.args[0]).unwrap();
                level.remove(kind.wire_token());
                order.retain(|k| *k != kind);
            }
            "RESET" => {
                order.clear();
                level.clear();
            }
            _ => {}
        }
    }
    order.into_iter().map(|k| (k, level[k.wire_token()])).collect()
}

// 6. Replay against the fold oracle.
fn replay_equivalence() -> Check {
    let mut rng = StdRng::seed_from_u64(6);
    for case in 0..10_000 {
        let len = rng.random_range(0..=200);
        let events: Vec<Event> = (0..len).map(|i| random_event(&mut rng, i)).collect();
        let got: Vec<(ResourceKind, u8)> =
            replay_resource_state(&events).iter().map(|t| (t.kind, t.percentage.get())).collect();
        let want = replay_oracle(&events);
        ensure!(got == want, "case {case}: got {got:?}, oracle {want:?}");
    }
    Ok(())
}

/// In-process link to a simulator state that keeps the raw text of the
/// last GETFOCUS and LISTWINDOWS replies.
struct SimLink {
    state: SimState,
    clock: Option<Arc<VirtualClock>>,
    focus_payload: String,
    list_lines: Vec<String>,
    exchanges: u64,
}

impl SimLink {
    fn new(state: SimState, clock: Option<Arc<VirtualClock>>) -> Self {
        SimLink { state, clock, focus_payload: String::new(), list_lines: Vec::new(), exchanges: 0 }
    }
}

impl DeviceLink for SimLink {
    type Error = ();

    fn exchange(&mut self, req: &DeviceRequest) -> Result<DeviceResponse, ()> {
        use tvstress_core::Clock;
        if let Some(c) = &self.clock {
            self.state.tick(c.now_ms());
        }
        self.exchanges += 1;
        // Round-trip through the wire text so the link sees real bytes.
        let wire = self.state.handle_device(&DeviceRequest::parse(&req.to_string()).unwrap()).encode();
        let mut asm = ResponseAssembler::for_request(req);
        let mut resp = None;
        for line in wire.lines() {
            resp = asm.push_line(line).unwrap();
        }
        let resp = resp.unwrap();
        match (req, &resp) {
            (DeviceRequest::GetFocus, DeviceResponse::Single(r)) => self.focus_payload = r.to_string(),
            (DeviceRequest::ListWindows, DeviceResponse::Lines(l)) => self.list_lines = l.clone(),
            _ => {}
        }
        Ok(resp)
    }
}

// 7. Focused-window resolution.
fn focused_window_resolution() -> Check {
    let mut rng = StdRng::seed_from_u64(7);
    for case in 0..500 {
        let n = rng.random_range(1..=50);
        let mut st = SimState::new();
        let names: Vec<String> = (0..n).map(|i| format!("com.app{}.Act{i}", rng.random_range(0..5))).collect();
        for name in &names {
            st.register_activity(name.clone(), GuiNode::new("FrameLayout", "root"));
        }
        for i in 0..n {
            let j = if rng.random_bool(0.3) { rng.random_range(0..n) } else { i };
            st.start_activity(&names[j]).unwrap();
        }
        let truth = st.focused().cloned().unwrap();
        let mut link = SimLink::new(st, None);
        let got = get_focused_window(&mut link).map_err(|e| format!("case {case}: {e:?}"))?;
        ensure!(got == truth, "case {case}: got {got:?}, simulator focus {truth:?}");
        // Independent scan of the raw reply text.
        let hash_text = link.focus_payload.strip_prefix("OK:").unwrap_or_default().to_string();
        let scanned = link
            .list_lines
            .iter()
            .find_map(|l| {
                let (h, name) = l.split_at(8);
                (h == hash_text).then(|| (u32::from_str_radix(h, 16).unwrap(), name[1..].to_string()))
            })
            .ok_or(format!("case {case}: focus hash missing from list"))?;
        ensure!(scanned == (got.hash, got.name.clone()), "case {case}: scan {scanned:?} vs {got:?}");
        ensure!(parse_hash(&hash_text) == Some(got.hash), "case {case}: focus text {hash_text}");
    }
    Ok(())
}

const SPINNER_SCENE: &str = "activity com.x.Player\n  FrameLayout id=root text=\"\" focused=0 visible=1 bounds=0,0,100,100\n    ProgressBar id=spinner text=\"\" focused=0 visible=0 bounds=40,40,20,20\ninitial com.x.Player\n";

// 8. UI-state waiting on a virtual clock.
fn wait_ui_timing() -> Check {
    let pred = UiPredicate::new(WaitLevel::Control, "com.x.Player/spinner", Condition::Visible).unwrap();
    for (appear_ms, poll_ms) in [(0u64, 500u64), (1000, 500), (1250, 500), (2300, 300), (4750, 1000), (9000, 3000)] {
        let text = format!("{SPINNER_SCENE}at {}.{:03} set com.x.Player/spinner visible=1\n", appear_ms / 1000, appear_ms % 1000);
        let clock = Arc::new(VirtualClock::new(0));
        let mut link = SimLink::new(SimState::from_scenario(&parse_scenario(&text).unwrap()), Some(clock.clone()));
        let cfg = WaitConfig::new(20_000, poll_ms).unwrap();
        let out = wait_ui_state(&mut link, &*clock, &pred, &cfg).map_err(|e| format!("{e:?}"))?;
        ensure!(
            out.elapsed_ms >= appear_ms && out.elapsed_ms <= appear_ms + poll_ms,
            "appears at {appear_ms} ms, poll {poll_ms}: detected at {} ms",
            out.elapsed_ms
        );
    }
    for (timeout, poll) in [(2000u64, 300u64), (2000, 2000), (3000, 1000), (1000, 7)] {
        let clock = Arc::new(VirtualClock::new(0));
        let mut link = SimLink::new(SimState::from_scenario(&parse_scenario(SPINNER_SCENE).unwrap()), Some(clock.clone()));
        let cfg = WaitConfig::new(timeout, poll).unwrap();
        match wait_ui_state(&mut link, &*clock, &pred, &cfg) {
            Err(GuiError::TimeoutExpired { elapsed_ms, queries }) => {
                let max = timeout.div_ceil(poll) + 1;
                ensure!(elapsed_ms >= timeout, "timed out early at {elapsed_ms} ms");
                ensure!((1..=max).contains(&queries), "{queries} queries, bound {max}");
            }
            other => return Err(format!("expected a timeout, got {other:?}")),
        }
    }
    Ok(())
}

fn random_text(rng: &mut StdRng, max_len: usize) -> String {
    let symbols: Vec<char> = ALPHABET.chars().collect();
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| symbols[rng.random_range(0..symbols.len())]).collect()
}

/// SNR measured by projecting the mix onto the clean signal; the residual
/// is the noise.
fn realized_snr_db(clean: &AudioStream, mixed: &AudioStream) -> f64 {
    let s: Vec<f64> = clean.samples.iter().map(|&v| v as f64).collect();
    let m: Vec<f64> = mixed.samples.iter().map(|&v| v as f64).collect();
    let g = s.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>() / s.iter().map(|a| a * a).sum::<f64>();
    let ps = s.iter().map(|a| (g * a).powi(2)).sum::<f64>();
    let pn = s.iter().zip(&m).map(|(a, b)| (b - g * a).powi(2)).sum::<f64>();
    10.0 * (ps / pn).log10()
}

// 9. Voice pipeline.
fn voice_pipeline() -> Check {
    let mut rng = StdRng::seed_from_u64(9);
    for case in 0..1000 {
        let text = random_text(&mut rng, 32);
        let heard = recognize(&synthesize(&text).unwrap()).map_err(|e| e.to_string())?;
        ensure!(heard == text, "case {case}: {text:?} heard as {heard:?}");
    }
    let clean = synthesize("weather of beijing").unwrap();
    for snr in [-20.0, -15.0, -10.0, 0.0, 10.0, 30.0, 60.0] {
        for seed in 0..5 {
            let realized = realized_snr_db(&clean, &mix_noise(&clean, NoiseSpec::new(snr, seed)));
            ensure!((realized - snr).abs() <= 0.5, "requested {snr} dB, realized {realized:.3} dB");
        }
    }
    let command = "channel four";
    assert_eq!(command.len(), 12);
    let source = synthesize(command).unwrap();
    let successes: Vec<usize> = [30.0, 0.0, -15.0]
        .into_iter()
        .map(|snr| {
            (0..200u64)
                .filter(|&seed| recognize(&mix_noise(&source, NoiseSpec::new(snr, 1000 + seed))).as_deref() == Ok(command))
                .count()
        })
        .collect();
    println!("    recognized of 200 at +30/0/-15 dB: {successes:?}");
    ensure!(successes[0] >= successes[1] && successes[1] >= successes[2], "not monotone: {successes:?}");
    Ok(())
}

// 10. Storage-space fill on a 64 MiB quota.
fn storage_space() -> Check {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("existing.bin"), vec![7u8; 300 << 10]).unwrap();
    let before = dir_bytes(dir.path()).map_err(|e| e.to_string())?;
    let mut cfg = AgentConfig::new("127.0.0.1:0", dir.path());
    cfg.storage_quota_bytes = 64 << 20;
    let mut agent = Agent::new(cfg).map_err(|e| e.to_string())?;
    let reply = agent.handle(&AgentRequest::Consume { kind: ResourceKind::StorageSpace, percentage: pct(99) });
    ensure!(reply == Reply::Ok, "consume: {reply}");
    let used = dir_bytes(dir.path()).map_err(|e| e.to_string())?;
    let free = (64u64 << 20).saturating_sub(used) as f64 / (1 << 20) as f64;
    let reported = agent.handle(&AgentRequest::Query(QueryTarget::Storage));
    let reported_free: u64 = reported.payload().unwrap_or_default().split(' ').nth(1).unwrap_or("x").parse().map_err(|_| format!("query: {reported}"))?;
    println!("    free after fill: {free:.3} MiB (agent reports {:.3} MiB)", reported_free as f64 / (1 << 20) as f64);
    ensure!(free < 1.64, "{free:.3} MiB free");
    ensure!(used <= 64 << 20, "fill overshot the quota: {used} bytes");
    agent.release(ReleaseTarget::Kind(ResourceKind::StorageSpace));
    let after = dir_bytes(dir.path()).map_err(|e| e.to_string())?;
    ensure!(after == before, "directory holds {after} bytes after release, {before} before");
    Ok(())
}

fn random_ident(rng: &mut StdRng) -> String {
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-$";
    let len = rng.random_range(1..=12);
    (0..len).map(|_| CHARS[rng.random_range(0..CHARS.len())] as char).collect()
}

fn random_line_text(rng: &mut StdRng, max: usize) -> String {
    const EXTRA: [char; 8] = ['"', '\\', ' ', 'é', '北', '=', '/', '\t'];
    let len = rng.random_range(0..=max);
    (0..len)
        .map(|_| {
            if rng.random_bool(0.2) {
                EXTRA[rng.random_range(0..EXTRA.len())]
            } else {
                rng.random_range(b' '..=b'~') as char
            }
        })
        .collect()
}

fn random_tree(rng: &mut StdRng, depth: usize, next_id: &mut u32) -> GuiNode {
    let mut n = GuiNode::new(random_ident(rng), format!("{}_{}", random_ident(rng), next_id));
    *next_id += 1;
    n.text = random_line_text(rng, 20);
    n.focused = rng.random_bool(0.5);
    n.visible = rng.random_bool(0.5);
    n.bounds = Bounds::new(rng.random_range(-5000..5000), rng.random_range(-5000..5000), rng.random(), rng.random());
    if depth < 6 {
        for _ in 0..rng.random_range(0..=if depth == 0 { 5 } else { 3 }) {
            n.children.push(random_tree(rng, depth + 1, next_id));
        }
    }
    n
}

fn random_device_request(rng: &mut StdRng) -> DeviceRequest {
    match rng.random_range(0..7) {
        0 => DeviceRequest::Ping,
        1 => DeviceRequest::GetFocus,
        2 => DeviceRequest::ListWindows,
        3 => DeviceRequest::DumpQ {
            window: rng.random(),
            control: rng.random_bool(0.5).then(|| random_ident(rng)),
            attr: None,
        },
        4 => DeviceRequest::Press(Keycode::ALL[rng.random_range(0..Keycode::ALL.len())]),
        5 => DeviceRequest::StartActivity(random_ident(rng)),
        _ => DeviceRequest::Quit,
    }
}

fn random_agent_request(rng: &mut StdRng) -> AgentRequest {
    let kind = ResourceKind::ALL[rng.random_range(0..5)];
    match rng.random_range(0..7) {
        0 => AgentRequest::Ping,
        1 => AgentRequest::Consume { kind, percentage: pct(rng.random_range(0..=100)) },
        2 => AgentRequest::Release(if rng.random_bool(0.2) { ReleaseTarget::All } else { ReleaseTarget::Kind(kind) }),
        3 => AgentRequest::Query(QueryTarget::ALL[rng.random_range(0..QueryTarget::ALL.len())]),
        4 => AgentRequest::Calibrate(if rng.random_bool(0.5) { CalibrationKind::Network } else { CalibrationKind::StorageBandwidth }),
        5 => AgentRequest::Reset,
        _ => AgentRequest::Quit,
    }
}

// 11. Wire codecs.
fn codec_round_trips() -> Check {
    let mut rng = StdRng::seed_from_u64(11);
    for case in 0..10_000 {
        let mut req = random_device_request(&mut rng);
        if let DeviceRequest::DumpQ { control: Some(_), attr, .. } = &mut req {
            *attr = rng.random_bool(0.5).then(|| Attribute::ALL[rng.random_range(0..5)]);
        }
        let line = req.to_string();
        ensure!(DeviceRequest::parse(&line).as_ref() == Ok(&req), "case {case}: {line:?}");
        let resp = if req.expects_lines() {
            DeviceResponse::Lines((0..rng.random_range(0..6)).map(|_| format!("x{}", random_line_text(&mut rng, 30))).collect())
        } else {
            match rng.random_range(0..3) {
                0 => DeviceResponse::Single(Reply::Ok),
                1 => DeviceResponse::Single(Reply::OkPayload(random_line_text(&mut rng, 30))),
                _ => DeviceResponse::Single(Reply::Error(random_line_text(&mut rng, 30))),
            }
        };
        let wire = resp.encode();
        ensure!(wire.len() == resp.encoded_len(), "case {case}: encoded_len");
        let mut asm = ResponseAssembler::for_request(&req);
        let mut got = None;
        for l in wire.split_terminator('\n') {
            ensure!(got.is_none(), "case {case}: response ended early");
            got = asm.push_line(l).map_err(|e| e.to_string())?;
        }
        ensure!(got.as_ref() == Some(&resp), "case {case}: {resp:?} decoded as {got:?}");
    }
    for case in 0..10_000 {
        let req = random_agent_request(&mut rng);
        let line = req.to_string();
        ensure!(AgentRequest::parse(&line).as_ref() == Ok(&req), "case {case}: {line:?}");
        ensure!(AgentRequest::parse(&line).unwrap().to_string() == line, "case {case}: re-encode {line:?}");
    }
    for case in 0..10_000 {
        let tree = random_tree(&mut rng, 0, &mut 0);
        let text = serialize_tree(&tree);
        let parsed = parse_tree(&tree_lines(&tree)).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(parsed == tree, "case {case}: tree differs");
        ensure!(serialize_tree(&parsed) == text, "case {case}: text differs");
    }
    for case in 0..10_000 {
        let n = rng.random_range(0..2000);
        let samples: Vec<i16> = (0..n).map(|_| rng.random()).collect();
        let frame = VoiceFrame { sample_rate: if rng.random_bool(0.8) { SAMPLE_RATE } else { rng.random() }, samples };
        let bytes = frame.encode();
        let back = VoiceFrame::decode(&bytes).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(back == frame && back.encode() == bytes, "case {case}: frame differs");
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "voice-launch script end to end", 30, voice_launch_end_to_end),
        (2, "CPU duty-cycle control", 60, cpu_duty_cycle),
        (3, "worker-count arithmetic", 5, worker_arithmetic),
        (4, "network calibration", 30, network_calibration),
        (5, "fault-tolerance replay", 20, fault_tolerance),
        (6, "replay oracle equivalence", 5, replay_equivalence),
        (7, "focused-window resolution", 10, focused_window_resolution),
        (8, "wait_ui timing", 5, wait_ui_timing),
        (9, "voice pipeline", 60, voice_pipeline),
        (10, "storage-space control", 10, storage_space),
        (11, "protocol codecs", 10, codec_round_trips),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, limit_s, check) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let _g = serial();
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        let result = result.and_then(|()| {
            if secs < limit_s as f64 {
                Ok(())
            } else {
                Err(format!("took {secs:.1} s, limit {limit_s} s"))
            }
        });
        match result {
            Ok(()) => println!("criterion {n:>2} PASS  {name} ({secs:.1} s)"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name} ({secs:.1} s): {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
