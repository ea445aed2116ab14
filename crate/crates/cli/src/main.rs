use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cam_core::harness::{self, HarnessError, RunMetrics, RunOptions, TraceError};
use cam_core::scenario::{load_scenario_file, ScenarioError, ScenarioSpec};
use clap::{Args, Parser, Subcommand};

/// Run, inspect and replay cloud autonomous mobility scenarios.
#[derive(Debug, Parser)]
#[command(name = "cam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a scenario and write trace, frame capture and metrics.
    Run(RunArgs),
    /// Compute metrics from a recorded trace.
    Metrics {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Re-read a trace, recompute metrics, optionally export a per-tick CSV.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Master seed; defaults to the scenario's `rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Run as fast as possible (default).
    #[arg(long, conflicts_with = "realtime")]
    fast: bool,
    /// Sleep to wall-clock tick boundaries.
    #[arg(long)]
    realtime: bool,
    /// Run node pipelines in parallel; traces are identical either way.
    #[arg(long)]
    concurrent: bool,
}

enum Failure {
    Validation(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Io(_) => 2,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

impl From<TraceError> for Failure {
    fn from(e: TraceError) -> Self {
        HarnessError::from(e).into()
    }
}

fn load(path: &Path) -> Result<ScenarioSpec, Failure> {
    let spec = load_scenario_file(path)?;
    Ok(spec)
}

fn print_metrics(m: &RunMetrics) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(m).map_err(|e| Failure::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run(args) => {
            let spec = load(&args.scenario)?;
            let seed = args.seed.unwrap_or(spec.rng_seed);
            let opts = RunOptions {
                realtime: args.realtime && !args.fast,
                concurrent: args.concurrent,
            };
            log::info!("running {} with seed {seed} ({} ticks)", spec.name, spec.tick_count());
            let out = harness::run(&spec, seed, &args.out, &opts)?;
            eprintln!("trace: {}", out.trace_path.display());
            eprintln!("metrics: {}", out.metrics_path.display());
            print_metrics(&out.metrics)
        }
        Command::Metrics { trace } => {
            let t = harness::read_trace_file(&trace)?;
            print_metrics(&harness::compute_metrics(&t))
        }
        Command::Replay { trace, csv } => {
            let m = harness::replay(&trace, csv.as_deref())?;
            print_metrics(&m)
        }
        Command::Validate { scenario } => {
            let spec = load(&scenario)?;
            let warnings = spec.validate().map_err(|e| Failure::Validation(format!("{}: {}", e.field, e.reason)))?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}: ok ({} nodes, {} agents, {} ticks)",
                spec.name,
                spec.nodes.len(),
                spec.agents.len(),
                spec.tick_count()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation(m) | Failure::Io(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
