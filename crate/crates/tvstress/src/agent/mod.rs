//! The resource agent: profiles the host and holds CPU, memory, network,
//! storage-bandwidth and storage-space load at requested levels.

mod calibrate;
mod client;
mod counters;
mod cpu;
mod data_service;
mod memory;
mod monitor;
mod netload;
mod server;
mod stop;
mod storage;

pub use calibrate::{calibrate_network, calibrate_storage, calibrate_with, MAX_NET_WORKERS, MAX_STORAGE_WORKERS};
pub use client::{AgentClient, AgentClientError};
pub use counters::Counters;
pub use cpu::{host_cpu_percent, CpuLoad};
pub use data_service::{DataService, DataServiceConfig};
pub use memory::{AllocationFailed, MemoryLoad};
pub use monitor::{Monitor, Rates};
pub use netload::NetLoad;
pub use server::{AgentServer, ServeError};
pub use stop::StopSignal;
pub use storage::{dir_bytes, SpaceError, SpaceFill, StorageBwLoad};

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tvstress_core::agent_proto::{
    format_calibration, format_cpu, format_pair, format_targets, AgentRequest, CalibrationKind, QueryTarget,
};
use tvstress_core::load::{residual_cpu, worker_count, CalibrationError, CalibrationResult, DutyCycle};
use tvstress_core::reply::Reply;
use tvstress_core::{LoadTarget, Percentage, ReleaseTarget, ResourceKind};

pub const DEFAULT_MEMORY_BUDGET: u64 = 256 << 20;
pub const DEFAULT_STORAGE_QUOTA: u64 = 64 << 20;

/// Where the agent's `currentPercent` comes from before starting CPU load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CpuBaseline {
    /// Load of the agent's own workers (zero once the old set is stopped).
    Workers,
    /// Whole-host utilisation from `/proc/stat` over 200 ms.
    Host,
    /// A fixed reading, for tests.
    Fixed(f64),
}

/// Worker counts found earlier, typically loaded from a calibration file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresetCalibration {
    pub max_network_workers: Option<u32>,
    pub max_storage_workers: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub listen: String,
    pub memory_budget_bytes: u64,
    pub quota_dir: PathBuf,
    pub storage_quota_bytes: u64,
    pub data_service: Option<String>,
    pub cores: Option<usize>,
    pub cpu_baseline: CpuBaseline,
    pub preset: PresetCalibration,
    pub calibration_window: Duration,
}

impl AgentConfig {
    pub fn new(listen: impl Into<String>, quota_dir: impl Into<PathBuf>) -> Self {
        AgentConfig {
            listen: listen.into(),
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
            quota_dir: quota_dir.into(),
            storage_quota_bytes: DEFAULT_STORAGE_QUOTA,
            data_service: None,
            cores: None,
            cpu_baseline: CpuBaseline::Workers,
            preset: PresetCalibration::default(),
            calibration_window: Duration::from_secs(1),
        }
    }

    pub fn core_count(&self) -> usize {
        self.cores
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Allocation(#[from] AllocationFailed),
    #[error("data service unreachable: {0}")]
    DataServiceUnreachable(std::io::Error),
    #[error("no data service configured")]
    NoDataService,
    #[error("quota directory unavailable: {0}")]
    QuotaDirUnavailable(std::io::Error),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("calibration failed: {0}")]
    Calibration(#[from] CalibrationError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceSnapshot {
    pub cpu_pct: f64,
    pub mem_used_bytes: u64,
    pub mem_total_bytes: u64,
    pub net_up_bps: u64,
    pub net_down_bps: u64,
    pub storage_total_bytes: u64,
    pub storage_free_bytes: u64,
    pub os_name: String,
    pub os_version: String,
    /// Set when a probe failed and its fields read as zero.
    pub degraded: bool,
}

pub fn os_info() -> (String, String) {
    let version = std::fs::read_to_string("/proc/sys/kernel/osrelease")
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|_| "unknown".to_string());
    (std::env::consts::OS.to_string(), version)
}

pub struct Agent {
    config: AgentConfig,
    cores: usize,
    counters: Arc<Counters>,
    monitor: Monitor,
    targets: Vec<LoadTarget>,
    cpu: Option<CpuLoad>,
    memory: MemoryLoad,
    net: Option<NetLoad>,
    storbw: Option<StorageBwLoad>,
    space: SpaceFill,
    net_calibration: Option<CalibrationResult>,
    storage_calibration: Option<CalibrationResult>,
}

impl std::fmt::Debug for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Agent").field("targets", &self.targets).finish_non_exhaustive()
    }
}

impl Agent {
    pub fn new(config: AgentConfig) -> Result<Agent, AgentError> {
        std::fs::create_dir_all(&config.quota_dir).map_err(AgentError::QuotaDirUnavailable)?;
        let cores = config.core_count();
        let counters = Arc::new(Counters::default());
        Ok(Agent {
            cores,
            monitor: Monitor::start(counters.clone(), cores),
            counters,
            targets: Vec::new(),
            cpu: None,
            memory: MemoryLoad::new(),
            net: None,
            storbw: None,
            space: SpaceFill::new(&config.quota_dir),
            net_calibration: None,
            storage_calibration: None,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn counters(&self) -> Arc<Counters> {
        self.counters.clone()
    }

    /// Active targets in the order their kinds were first established.
    pub fn targets(&self) -> &[LoadTarget] {
        &self.targets
    }

    pub fn cpu_workers(&self) -> usize {
        self.cpu.as_ref().map_or(0, CpuLoad::workers)
    }

    pub fn cpu_duty(&self) -> Option<DutyCycle> {
        self.cpu.as_ref().map(CpuLoad::duty)
    }

    pub fn memory_held(&self) -> u64 {
        self.memory.held()
    }

    pub fn net_load(&self) -> Option<&NetLoad> {
        self.net.as_ref()
    }

    pub fn storage_bw_load(&self) -> Option<&StorageBwLoad> {
        self.storbw.as_ref()
    }

    fn set_target(&mut self, kind: ResourceKind, p: Percentage) {
        match self.targets.iter_mut().find(|t| t.kind == kind) {
            Some(t) => t.percentage = p,
            None => self.targets.push(LoadTarget::active(kind, p)),
        }
    }

    fn current_cpu(&self) -> f64 {
        match self.config.cpu_baseline {
            CpuBaseline::Workers => {
                if self.cpu.is_some() {
                    self.monitor.rates().cpu_pct
                } else {
                    0.0
                }
            }
            CpuBaseline::Host => host_cpu_percent(Duration::from_millis(200)).unwrap_or(0.0),
            CpuBaseline::Fixed(v) => v,
        }
    }

    fn network_max(&mut self) -> Result<u32, AgentError> {
        if let Some(n) = self.config.preset.max_network_workers {
            return Ok(n.max(1));
        }
        if let Some(c) = self.net_calibration {
            return Ok(c.max_workers);
        }
        Ok(self.calibrate(CalibrationKind::Network)?.max_workers)
    }

    fn storage_max(&mut self) -> Result<u32, AgentError> {
        if let Some(n) = self.config.preset.max_storage_workers {
            return Ok(n.max(1));
        }
        if let Some(c) = self.storage_calibration {
            return Ok(c.max_workers);
        }
        Ok(self.calibrate(CalibrationKind::StorageBandwidth)?.max_workers)
    }

    pub fn consume(&mut self, kind: ResourceKind, p: Percentage) -> Result<(), AgentError> {
        match kind {
            ResourceKind::Cpu => {
                if let Some(old) = self.cpu.take() {
                    old.stop();
                }
                let to_consume = residual_cpu(p, self.current_cpu());
                if let Some(duty) = DutyCycle::for_percent(to_consume) {
                    self.cpu = Some(CpuLoad::start(self.cores, duty, self.counters.clone()));
                }
            }
            ResourceKind::Memory => {
                let r = self.memory.set_target(p.of(self.config.memory_budget_bytes));
                self.set_target(kind, p);
                r?;
            }
            ResourceKind::Network => {
                let endpoint = self.config.data_service.clone().ok_or(AgentError::NoDataService)?;
                let max = self.network_max()?;
                if let Some(old) = self.net.take() {
                    old.stop();
                }
                let n = worker_count(max, p);
                if n > 0 {
                    let load = NetLoad::start(&endpoint, n, self.counters.clone())
                        .map_err(AgentError::DataServiceUnreachable)?;
                    self.net = Some(load);
                }
            }
            ResourceKind::StorageBandwidth => {
                let max = self.storage_max()?;
                if let Some(old) = self.storbw.take() {
                    old.stop();
                }
                let n = worker_count(max, p);
                if n > 0 {
                    let load = StorageBwLoad::start(&self.config.quota_dir, n, self.counters.clone())
                        .map_err(AgentError::QuotaDirUnavailable)?;
                    self.storbw = Some(load);
                }
            }
            ResourceKind::StorageSpace => {
                let r = self.space.fill(p.of(self.config.storage_quota_bytes));
                self.set_target(kind, p);
                r?;
            }
        }
        self.set_target(kind, p);
        Ok(())
    }

    pub fn release(&mut self, target: ReleaseTarget) {
        for kind in ResourceKind::ALL {
            if !target.covers(kind) {
                continue;
            }
            match kind {
                ResourceKind::Cpu => {
                    if let Some(l) = self.cpu.take() {
                        l.stop();
                    }
                }
                ResourceKind::Memory => {
                    let _ = self.memory.set_target(0);
                }
                ResourceKind::Network => {
                    if let Some(l) = self.net.take() {
                        l.stop();
                    }
                }
                ResourceKind::StorageBandwidth => {
                    if let Some(l) = self.storbw.take() {
                        l.stop();
                    }
                }
                ResourceKind::StorageSpace => self.space.clear(),
            }
            self.targets.retain(|t| t.kind != kind);
        }
    }

    /// Releases everything and forgets measured calibrations. Worker
    /// counts preset in the configuration stay.
    pub fn reset(&mut self) {
        self.release(ReleaseTarget::All);
        self.net_calibration = None;
        self.storage_calibration = None;
    }

    pub fn calibrate(&mut self, kind: CalibrationKind) -> Result<CalibrationResult, AgentError> {
        let window = self.config.calibration_window;
        match kind {
            CalibrationKind::Network => {
                let endpoint = self.config.data_service.clone().ok_or(AgentError::NoDataService)?;
                let r = calibrate_network(&endpoint, window)?;
                self.net_calibration = Some(r);
                Ok(r)
            }
            CalibrationKind::StorageBandwidth => {
                let r = calibrate_storage(&self.config.quota_dir, window)?;
                self.storage_calibration = Some(r);
                Ok(r)
            }
        }
    }

    fn storage_used(&self) -> std::io::Result<u64> {
        dir_bytes(&self.config.quota_dir)
    }

    pub fn snapshot(&self) -> ResourceSnapshot {
        let rates = self.monitor.rates();
        let (os_name, os_version) = os_info();
        let used = self.storage_used();
        let quota = self.config.storage_quota_bytes;
        ResourceSnapshot {
            cpu_pct: rates.cpu_pct,
            mem_used_bytes: self.memory.held(),
            mem_total_bytes: self.config.memory_budget_bytes,
            net_up_bps: rates.up_bps,
            net_down_bps: rates.down_bps,
            storage_total_bytes: quota,
            storage_free_bytes: used.as_ref().map_or(0, |u| quota.saturating_sub(*u)),
            os_name,
            os_version,
            degraded: used.is_err() || self.memory.is_degraded(),
        }
    }

    /// Executes one protocol command.
    pub fn handle(&mut self, req: &AgentRequest) -> Reply {
        let error = |e: &dyn std::fmt::Display| Reply::Error(e.to_string().replace(['\n', '\r'], " "));
        match req {
            AgentRequest::Ping | AgentRequest::Quit => Reply::Ok,
            AgentRequest::Consume { kind, percentage } => match self.consume(*kind, *percentage) {
                Ok(()) => Reply::Ok,
                Err(e) => error(&e),
            },
            AgentRequest::Release(t) => {
                self.release(*t);
                Reply::Ok
            }
            AgentRequest::Reset => {
                self.reset();
                Reply::Ok
            }
            AgentRequest::Calibrate(kind) => match self.calibrate(*kind) {
                Ok(r) => Reply::OkPayload(format_calibration(&r)),
                Err(e) => error(&e),
            },
            AgentRequest::Query(q) => Reply::OkPayload(match q {
                QueryTarget::Cpu => format_cpu(self.monitor.rates().cpu_pct),
                QueryTarget::Memory => format_pair(self.memory.held(), self.config.memory_budget_bytes),
                QueryTarget::Network => {
                    let r = self.monitor.rates();
                    format_pair(r.up_bps, r.down_bps)
                }
                QueryTarget::Storage => {
                    let s = self.snapshot();
                    format_pair(s.storage_total_bytes, s.storage_free_bytes)
                }
                QueryTarget::Os => {
                    let (name, version) = os_info();
                    format!("{name} {version}")
                }
                QueryTarget::Targets => format_targets(&self.targets),
            }),
        }
    }
}

impl Drop for Agent {
    fn drop(&mut self) {
        self.release(ReleaseTarget::All);
    }
}
