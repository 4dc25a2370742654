mod common;

use common::*;
use tvstress::interpreter::run_script;
use tvstress_core::sim::FaultPlan;
use tvstress_core::{Interface, Outcome};

#[test]
fn voice_launch_script_passes() {
    let _g = serial();
    let rig = Rig::start(FaultPlan::none());
    let (verdict, trace) = run_script(&script(VOICE_LAUNCH), &rig.config());
    assert!(verdict.is_passed(), "{verdict:?}\n{}", trace.to_tsv());
    assert!(trace.is_well_formed());
    let count = |iface: Interface, cmd: &str| {
        trace.events.iter().filter(|e| e.interface == iface && e.command == cmd).count()
    };
    assert_eq!(count(Interface::Agent, "CONSUME"), 3);
    assert_eq!(count(Interface::Agent, "RELEASE"), 3);
    assert_eq!(count(Interface::Voice, "VOICE"), 5);
    assert_eq!(count(Interface::Device, "PRESS"), 1);
    assert!(trace.events.iter().all(|e| matches!(e.outcome, Outcome::Ok(_))), "{}", trace.to_tsv());
    assert!(rig.agent.agent().lock().unwrap().targets().is_empty());
}
