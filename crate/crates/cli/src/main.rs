mod bridge;
mod learn;
mod live;
mod net;
mod replay;
mod send;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use handswarm::netproto::{DEFAULT_COMMAND_PORT, DEFAULT_KEYPOINT_PORT, DEFAULT_TELEMETRY_PORT, DEFAULT_TELEMETRY_HZ};
use handswarm::scenario::{run_scenario, Scenario};

#[derive(Parser)]
#[command(name = "handswarm", version, about = "Gesture-steerable UAV swarm simulator and tools")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario, headless by default.
    Run(RunArgs),
    /// Recompute metrics from a trajectory log and optionally play it back.
    Replay(ReplayArgs),
    /// Train a gesture classifier from a CSV dataset.
    Train(learn::TrainArgs),
    /// Evaluate a saved classifier on a CSV dataset.
    Eval(learn::EvalArgs),
    /// Check a gesture mapping file.
    ValidateMapping {
        path: PathBuf,
    },
    /// Send commands to a live run over UDP.
    Send(send::SendArgs),
    /// Relay telemetry and commands between UDP and WebSocket clients.
    Bridge(bridge::BridgeArgs),
    /// Write a synthetic dataset or keypoint recording.
    GenDataset(learn::GenArgs),
}

/// Command, telemetry and keypoint ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ports {
    pub command: u16,
    pub telemetry: u16,
    pub keypoints: u16,
}

impl Default for Ports {
    fn default() -> Self {
        Self {
            command: DEFAULT_COMMAND_PORT,
            telemetry: DEFAULT_TELEMETRY_PORT,
            keypoints: DEFAULT_KEYPOINT_PORT,
        }
    }
}

impl std::str::FromStr for Ports {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<u16> = s
            .split(',')
            .map(|p| p.trim().parse::<u16>().map_err(|e| format!("bad port {p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [command, telemetry, keypoints] => Ok(Ports {
                command,
                telemetry,
                keypoints,
            }),
            _ => Err("expected COMMAND,TELEMETRY,KEYPOINTS".into()),
        }
    }
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, conflicts_with = "live")]
    headless: bool,
    /// Real-time pacing with UDP listeners.
    #[arg(long)]
    live: bool,
    /// COMMAND,TELEMETRY,KEYPOINTS
    #[arg(long, default_value = "47801,47802,47803")]
    ports: Ports,
    /// Telemetry rate in Hz (live only).
    #[arg(long, default_value_t = DEFAULT_TELEMETRY_HZ)]
    rate: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Telemetry destination host (live only).
    #[arg(long, default_value = "127.0.0.1")]
    telemetry_host: String,
    /// Static gesture model for keypoint input (live only).
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    dynamic_model: Option<PathBuf>,
    /// Gesture mapping rules; the bundled defaults when omitted.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Keep running after the scenario duration until interrupted (live only).
    #[arg(long)]
    hold_open: bool,
}

#[derive(Args)]
pub struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    /// Playback speed multiple.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Pace frames in wall-clock time.
    #[arg(long)]
    play: bool,
    /// Send telemetry to this address while playing.
    #[arg(long)]
    telemetry_to: Option<String>,
    /// Telemetry frequency while playing, Hz.
    #[arg(long, default_value_t = DEFAULT_TELEMETRY_HZ)]
    telemetry_hz: f64,
    #[arg(long, default_value_t = 1.0)]
    d_col: f64,
}

fn output_paths(s: &Scenario, out_dir: &Path) -> (PathBuf, PathBuf) {
    let traj = s.outputs.trajectory.clone().unwrap_or_else(|| format!("{}.trajectory.csv", s.name));
    let metrics = s.outputs.metrics.clone().unwrap_or_else(|| format!("{}.metrics.json", s.name));
    (out_dir.join(traj), out_dir.join(metrics))
}

fn run(args: RunArgs) -> Result<()> {
    let mut scenario = Scenario::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
        scenario.validate()?;
    }
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let (traj_path, metrics_path) = output_paths(&scenario, &args.out_dir);
    let file = std::fs::File::create(&traj_path).with_context(|| format!("creating {}", traj_path.display()))?;
    let out = std::io::BufWriter::new(file);
    let metrics = if args.live {
        live::run_live(&scenario, &args, out)?
    } else {
        run_scenario(&scenario, out)?
    };
    let text = serde_json::to_string_pretty(&metrics)?;
    std::fs::write(&metrics_path, format!("{text}\n")).with_context(|| format!("writing {}", metrics_path.display()))?;
    log::info!("wrote {} and {}", traj_path.display(), metrics_path.display());
    println!("{text}");
    Ok(())
}

fn validate_mapping(path: &Path) -> Result<()> {
    match handswarm::mapping::MappingRules::load(path) {
        Ok(rules) => {
            println!("{}: ok ({} labels)", path.display(), rules.labels().len());
            Ok(())
        }
        Err(e) => bail!("{}: {e}", path.display()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HGIC_LOG_LEVEL", "info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run(a) => run(a),
        Cmd::Replay(a) => replay::replay(a),
        Cmd::Train(a) => learn::train(a),
        Cmd::Eval(a) => learn::eval(a),
        Cmd::ValidateMapping { path } => validate_mapping(&path),
        Cmd::Send(a) => send::send(a),
        Cmd::Bridge(a) => bridge::bridge(a),
        Cmd::GenDataset(a) => learn::gen_dataset(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
