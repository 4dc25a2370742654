use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tvstress::agent::{
    AgentClient, AgentConfig, AgentServer, CpuBaseline, DataService, DataServiceConfig, PresetCalibration,
    DEFAULT_MEMORY_BUDGET, DEFAULT_STORAGE_QUOTA,
};
use tvstress::interpreter::{Endpoints, InterpreterConfig};
use tvstress::sim_server::{load_scenario, SimServer, SimServerConfig};
use tvstress::suite::{check_scripts, format_table, run_suite};
use tvstress_core::agent_proto::{parse_calibration, AgentRequest, CalibrationKind};
use tvstress_core::report::SuiteReport;
use tvstress_core::reply::Reply;
use tvstress_core::sim::{FaultPlan, FaultTarget};
use tvstress_core::RetryPolicy;

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "tvstress", version, about = "Stress-test orchestration for remote GUI devices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run test scripts in order and report their verdicts.
    Run(RunArgs),
    /// Ask an agent to find its saturating worker count.
    Calibrate(CalibrateArgs),
    /// Resource agent service.
    Agent {
        #[command(subcommand)]
        command: AgentCommand,
    },
    /// Serve a simulated device and voice assistant.
    Simulate(SimulateArgs),
    /// Pretty-print a saved suite report.
    Report { path: PathBuf },
    /// Serve the upload/download sink used for network load.
    DataService(DataServiceArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(required = true)]
    scripts: Vec<PathBuf>,
    #[arg(long)]
    device: Option<String>,
    #[arg(long)]
    agent: Option<String>,
    #[arg(long)]
    voice: Option<String>,
    /// Attempts per event on connection faults.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    retries: u32,
    #[arg(long, default_value_t = 500)]
    retry_delay_ms: u64,
    #[arg(long, default_value_t = 0)]
    noise_seed: u64,
    /// Directory for per-script trace files.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Where to write the tab-separated report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CalibrateKind {
    Net,
    Storbw,
}

#[derive(Args)]
struct CalibrateArgs {
    kind: CalibrateKind,
    #[arg(long)]
    agent: String,
    /// Merge the result into this calibration file.
    #[arg(long)]
    save: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AgentCommand {
    /// Run the agent in the foreground until interrupted.
    Serve(AgentServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Workers,
    Host,
}

#[derive(Args)]
struct AgentServeArgs {
    #[arg(long, env = "TVSTRESS_AGENT_LISTEN", default_value = "127.0.0.1:7100")]
    listen: String,
    #[arg(long, env = "TVSTRESS_MEM_BUDGET", default_value_t = DEFAULT_MEMORY_BUDGET)]
    mem_budget: u64,
    #[arg(long, env = "TVSTRESS_QUOTA_DIR")]
    quota_dir: PathBuf,
    #[arg(long, env = "TVSTRESS_QUOTA_BYTES", default_value_t = DEFAULT_STORAGE_QUOTA)]
    quota_bytes: u64,
    #[arg(long, env = "TVSTRESS_DATA_SERVICE")]
    data_service: Option<String>,
    #[arg(long)]
    cores: Option<usize>,
    #[arg(long, value_enum, default_value_t = BaselineArg::Workers)]
    cpu_baseline: BaselineArg,
    /// Calibration file written by `calibrate --save`.
    #[arg(long)]
    calibration: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultTargetArg {
    Device,
    Voice,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "127.0.0.1:7200")]
    device_listen: String,
    #[arg(long, default_value = "127.0.0.1:7300")]
    voice_listen: String,
    /// Close each connection after answering this many commands.
    #[arg(long)]
    drop_after: Option<u32>,
    /// Stop dropping after this many connections.
    #[arg(long)]
    drop_limit: Option<u32>,
    /// Answer the next K commands with ERROR:injected.
    #[arg(long, default_value_t = 0)]
    fail_next: u32,
    #[arg(long, value_enum, default_value_t = FaultTargetArg::Device)]
    fault_target: FaultTargetArg,
    /// Advance simulated time 100 ms per command instead of using the wall clock.
    #[arg(long)]
    virtual_clock: bool,
}

#[derive(Args)]
struct DataServiceArgs {
    #[arg(long, default_value = "127.0.0.1:7400")]
    listen: String,
    #[arg(long)]
    per_conn_bps: Option<u64>,
    #[arg(long)]
    total_bps: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Run(a) => return run(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Agent { command: AgentCommand::Serve(a) } => agent_serve(a),
        Command::Simulate(a) => simulate(a),
        Command::Report { path } => report(&path),
        Command::DataService(a) => data_service(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}

fn run(a: RunArgs) -> ExitCode {
    if let Err(e) = check_scripts(&a.scripts) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    let mut cfg = InterpreterConfig::new(Endpoints { device: a.device, agent: a.agent, voice: a.voice });
    cfg.policy = RetryPolicy::new(a.retries, a.retry_delay_ms).expect("retries >= 1");
    cfg.noise_seed = a.noise_seed;
    let report = match run_suite(&a.scripts, &cfg, a.trace.as_deref()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILED);
        }
    };
    print!("{}", format_table(&report));
    if let Some(path) = &a.report {
        if let Err(e) = std::fs::write(path, report.to_tsv()) {
            eprintln!("error: cannot write report {}: {e}", path.display());
            return ExitCode::from(EXIT_FAILED);
        }
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}

fn calibrate(a: CalibrateArgs) -> anyhow::Result<()> {
    let kind = match a.kind {
        CalibrateKind::Net => CalibrationKind::Network,
        CalibrateKind::Storbw => CalibrationKind::StorageBandwidth,
    };
    let mut client = AgentClient::connect(&a.agent, Duration::from_secs(2), Duration::from_secs(10))
        .with_context(|| format!("agent {} unreachable", a.agent))?;
    let reply = client.request(&AgentRequest::Calibrate(kind))?;
    client.close();
    let result = match reply {
        Reply::Error(m) => return Err(anyhow!("calibration failed: {m}")),
        ok => parse_calibration(ok.payload().unwrap_or_default())?,
    };
    let label = match kind {
        CalibrationKind::Network => "max_network_workers",
        CalibrationKind::StorageBandwidth => "max_storage_workers",
    };
    println!("{label}={}", result.max_workers);
    println!("saturated_bytes_per_sec={}", result.saturated_bytes_per_sec);
    if let Some(path) = &a.save {
        let mut preset = if path.exists() { read_calibration(path)? } else { PresetCalibration::default() };
        match kind {
            CalibrationKind::Network => preset.max_network_workers = Some(result.max_workers),
            CalibrationKind::StorageBandwidth => preset.max_storage_workers = Some(result.max_workers),
        }
        std::fs::write(path, toml::to_string(&preset)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn read_calibration(path: &Path) -> anyhow::Result<PresetCalibration> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Blocks until SIGINT or SIGTERM.
fn wait_for_signal() -> anyhow::Result<()> {
    let (tx, rx) = mpsc::channel();
    ctrlc::set_handler(move || {
        let _ = tx.send(());
    })?;
    let _ = rx.recv();
    Ok(())
}

fn agent_serve(a: AgentServeArgs) -> anyhow::Result<()> {
    let mut cfg = AgentConfig::new(a.listen, a.quota_dir);
    cfg.memory_budget_bytes = a.mem_budget;
    cfg.storage_quota_bytes = a.quota_bytes;
    cfg.data_service = a.data_service;
    cfg.cores = a.cores;
    cfg.cpu_baseline = match a.cpu_baseline {
        BaselineArg::Workers => CpuBaseline::Workers,
        BaselineArg::Host => CpuBaseline::Host,
    };
    if let Some(path) = &a.calibration {
        cfg.preset = read_calibration(path)?;
    }
    let server = AgentServer::start(cfg)?;
    eprintln!("agent listening on {}", server.local_addr());
    wait_for_signal()?;
    server.shutdown();
    eprintln!("agent stopped, all loads released");
    Ok(())
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let state = load_scenario(&a.scenario)?;
    let faults = FaultPlan {
        drop_after: a.drop_after,
        drop_limit: a.drop_limit,
        fail_next: a.fail_next,
        apply_to: match a.fault_target {
            FaultTargetArg::Device => FaultTarget::Device,
            FaultTargetArg::Voice => FaultTarget::Voice,
        },
    };
    let cfg = SimServerConfig {
        device_listen: a.device_listen,
        voice_listen: a.voice_listen,
        faults,
        virtual_clock: a.virtual_clock,
    };
    let server = SimServer::start(state, &cfg)?;
    eprintln!("device on {}, voice on {}", server.device_addr(), server.voice_addr());
    wait_for_signal()?;
    server.shutdown();
    Ok(())
}

fn report(path: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report = SuiteReport::from_tsv(&text)?;
    print!("{}", format_table(&report));
    Ok(())
}

fn data_service(a: DataServiceArgs) -> anyhow::Result<()> {
    let cfg = DataServiceConfig { per_connection_bps: a.per_conn_bps, total_bps: a.total_bps };
    let service = DataService::bind(&a.listen, cfg).with_context(|| format!("cannot bind {}", a.listen))?;
    eprintln!("data service on {}", service.local_addr());
    wait_for_signal()?;
    service.shutdown();
    Ok(())
}
