#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};
use std::time::Duration;

use tvstress::agent::{AgentConfig, AgentServer, DataService, DataServiceConfig, PresetCalibration};
use tvstress::interpreter::{Endpoints, InterpreterConfig};
use tvstress::sim_server::{SimServer, SimServerConfig};
use tvstress_core::script::{parse_script, ScriptAst};
use tvstress_core::sim::{parse_scenario, FaultPlan, SimState};
use tvstress_core::RetryPolicy;

pub const MEDIA_CENTER: &str = include_str!("../../assets/media_center.scn");
pub const VOICE_LAUNCH: &str = include_str!("../../assets/voice_launch.sfs");

/// Load-generating tests share one core; run them one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

pub fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

pub fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

pub fn media_center() -> SimState {
    SimState::from_scenario(&parse_scenario(MEDIA_CENTER).unwrap())
}

pub fn script(text: &str) -> ScriptAst {
    parse_script(text, "test.sfs").unwrap()
}

/// A capped data service: `per_conn` bytes/s per connection, `total`
/// overall.
pub fn data_service(per_conn: u64, total: u64) -> DataService {
    DataService::bind(
        "127.0.0.1:0",
        DataServiceConfig { per_connection_bps: Some(per_conn), total_bps: Some(total) },
    )
    .unwrap()
}

pub fn agent_config(quota: &Path, data: Option<&DataService>) -> AgentConfig {
    let mut cfg = AgentConfig::new("127.0.0.1:0", quota);
    cfg.memory_budget_bytes = 32 << 20;
    cfg.storage_quota_bytes = 16 << 20;
    cfg.data_service = data.map(|d| d.local_addr().to_string());
    cfg.preset = RIG_PRESET;
    cfg
}

/// Worker ceilings for the rig's data service, so loads start without
/// calibrating first.
pub const RIG_PRESET: PresetCalibration = PresetCalibration { max_network_workers: Some(4), max_storage_workers: Some(4) };

/// Simulator, agent and data service on loopback.
pub struct Rig {
    pub sim: SimServer,
    pub agent: AgentServer,
    pub data: DataService,
    pub dir: tempfile::TempDir,
}

impl Rig {
    pub fn start(faults: FaultPlan) -> Rig {
        let dir = tempfile::tempdir().unwrap();
        let data = data_service(2 << 20, 8 << 20);
        let agent = AgentServer::start(agent_config(dir.path(), Some(&data))).unwrap();
        let sim = SimServer::start(media_center(), &SimServerConfig { faults, ..SimServerConfig::loopback() }).unwrap();
        Rig { sim, agent, data, dir }
    }

    pub fn endpoints(&self) -> Endpoints {
        Endpoints {
            device: Some(self.sim.device_addr().to_string()),
            agent: Some(self.agent.local_addr().to_string()),
            voice: Some(self.sim.voice_addr().to_string()),
        }
    }

    pub fn config(&self) -> InterpreterConfig {
        fast_config(self.endpoints())
    }
}

pub fn fast_config(endpoints: Endpoints) -> InterpreterConfig {
    let mut cfg = InterpreterConfig::new(endpoints);
    cfg.policy = RetryPolicy::new(3, 50).unwrap();
    cfg.connect_timeout = Duration::from_secs(1);
    cfg.io_timeout = Duration::from_secs(10);
    cfg
}
