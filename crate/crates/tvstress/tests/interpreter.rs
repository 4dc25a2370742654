mod common;

use common::*;
use tvstress::agent::AgentServer;
use tvstress::interpreter::{run_script, Endpoints};
use tvstress::sim_server::{SimServer, SimServerConfig};
use tvstress_core::sim::FaultPlan;
use tvstress_core::{Interface, Outcome, VerdictStatus};

fn device_only(sim: &SimServer) -> Endpoints {
    Endpoints { device: Some(sim.device_addr().to_string()), ..Endpoints::default() }
}

fn sim(faults: FaultPlan) -> SimServer {
    SimServer::start(media_center(), &SimServerConfig { faults, ..SimServerConfig::loopback() }).unwrap()
}

#[test]
fn one_dropped_connection_is_retried() {
    let _g = serial();
    let sim = sim(FaultPlan::drop_once_after(1));
    let cfg = fast_config(device_only(&sim));
    let (verdict, trace) = run_script(&script("connect\npress HOME\nfocused -> w\n"), &cfg);
    assert!(verdict.is_passed(), "{verdict:?}\n{}", trace.to_tsv());
    let cmds: Vec<(&str, bool)> = trace.events.iter().map(|e| (e.command.as_str(), e.outcome.is_error())).collect();
    assert_eq!(cmds[..3], [("PING", false), ("PRESS", true), ("PRESS", false)]);
    assert_eq!(sim.device_fault_counts(), (2, 1));
    assert!(trace.is_well_formed());
}

#[test]
fn failed_assertion_names_line_and_values() {
    let _g = serial();
    let sim = sim(FaultPlan::none());
    let cfg = fast_config(device_only(&sim));
    let text = "connect\n# comment\nfocused -> w\nassert w.name == \"com.nope.Other\"\npress HOME\n";
    let (verdict, trace) = run_script(&script(text), &cfg);
    assert_eq!(verdict.status(), VerdictStatus::Failed);
    assert_eq!(verdict.failing_line, Some(4));
    let reason = verdict.reason().unwrap();
    assert!(reason.contains("assertion failed") && reason.contains("com.nope.Other"), "{reason}");
    // The failing event is the one that produced `w`, the LISTWINDOWS read.
    let seq = verdict.failing_seq.unwrap();
    assert_eq!(trace.get(seq).unwrap().command, "LISTWINDOWS");
    assert!(trace.events.iter().all(|e| e.command != "PRESS"));
}

#[test]
fn unconfigured_interface_fails_its_statement() {
    let _g = serial();
    let sim = sim(FaultPlan::none());
    let cfg = fast_config(device_only(&sim));
    let (verdict, _) = run_script(&script("connect\nvoice \"channel 4\"\n"), &cfg);
    assert_eq!(verdict.status(), VerdictStatus::Failed);
    assert_eq!(verdict.failing_line, Some(2));
}

#[test]
fn failure_releases_held_loads() {
    let _g = serial();
    let rig = Rig::start(FaultPlan::none());
    let text = "connect\nconsume memory 20\nconsume cpu 30\nstart_activity \"com.nope.Missing\"\nrelease all\n";
    let (verdict, trace) = run_script(&script(text), &rig.config());
    assert_eq!(verdict.status(), VerdictStatus::Failed);
    assert_eq!(verdict.failing_line, Some(4));
    let last = trace.events.last().unwrap();
    assert_eq!((last.interface, last.command.as_str(), last.args.as_slice()), (Interface::Agent, "RELEASE", &["ALL".to_string()][..]));
    assert!(matches!(last.outcome, Outcome::Ok(_)));
    assert!(rig.agent.agent().lock().unwrap().targets().is_empty());
}

#[test]
fn agent_error_reply_is_not_retried() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let agent = AgentServer::start(agent_config(dir.path(), None)).unwrap();
    let cfg = fast_config(Endpoints { agent: Some(agent.local_addr().to_string()), ..Endpoints::default() });
    let (verdict, trace) = run_script(&script("consume memory 10\nconsume network 50\n"), &cfg);
    assert_eq!(verdict.status(), VerdictStatus::Failed);
    assert_eq!(verdict.failing_line, Some(2));
    let network: Vec<_> = trace.events.iter().filter(|e| e.args.first().map(String::as_str) == Some("NET")).collect();
    assert_eq!(network.len(), 1, "{}", trace.to_tsv());
    assert!(network[0].outcome.is_error());
    assert_eq!(trace.events.last().unwrap().command, "RELEASE");
    assert!(agent.agent().lock().unwrap().targets().is_empty());
}

#[test]
fn loops_bind_index_and_item() {
    let _g = serial();
    let sim = sim(FaultPlan::none());
    let cfg = fast_config(Endpoints {
        device: Some(sim.device_addr().to_string()),
        voice: Some(sim.voice_addr().to_string()),
        agent: None,
    });
    let text = "\
connect
let cmds = [\"channel 4\", \"search google\"]
let want = [\"com.atv.activity.AtvMainActivity\", \"com.android.browser.BrowserActivity\"]
foreach i, c in cmds
  voice c
  focused -> w
  assert w.name == want[i]
end
";
    let (verdict, trace) = run_script(&script(text), &cfg);
    assert!(verdict.is_passed(), "{verdict:?}\n{}", trace.to_tsv());
    let voices: Vec<&str> = trace.events.iter().filter(|e| e.interface == Interface::Voice).map(|e| e.args[0].as_str()).collect();
    assert_eq!(voices, ["channel 4", "search google"]);
}
