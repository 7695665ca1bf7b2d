use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ion_dfs_cli::config::{ConfigError, ExperimentKind};
use ion_dfs_cli::{run, LoadedConfig, RunSettings};

#[derive(Parser)]
#[command(
    name = "ion-dfs",
    version,
    about = "Two trapped-ion qubits in a phonon bath: kernels, DFS dynamics, exact checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mode spectrum and couplings of the chain
    Modes(RunArgs),
    /// Decoherence kernels on the time grid
    Kernels(RunArgs),
    /// Collective dephasing of a two-qubit state
    Dephase(RunArgs),
    /// Effective DFS dynamics and entangling time
    Dfs(RunArgs),
    /// Brute-force truncated spin-boson evolution
    Exact(RunArgs),
    /// Teleportation fidelities and relays
    Teleport(RunArgs),
    /// Parameter sweep over one or two config paths
    Sweep(RunArgs),
    /// Check a configuration without running anything
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Quadrature and propagator tolerance
    #[arg(long)]
    tolerance: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Validate { config } => {
            return match LoadedConfig::from_path(&config, None) {
                Ok(l) => {
                    println!("{}: ok ({})", config.display(), l.config.experiment.as_str());
                    ExitCode::SUCCESS
                }
                Err(e) => config_failure(&config, &e),
            };
        }
        Command::Modes(a) => (ExperimentKind::Modes, a),
        Command::Kernels(a) => (ExperimentKind::Kernels, a),
        Command::Dephase(a) => (ExperimentKind::Dephase, a),
        Command::Dfs(a) => (ExperimentKind::Dfs, a),
        Command::Exact(a) => (ExperimentKind::Exact, a),
        Command::Teleport(a) => (ExperimentKind::Teleport, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
    };
    let loaded = match LoadedConfig::from_path(&args.config, Some(kind)) {
        Ok(l) => l,
        Err(e) => return config_failure(&args.config, &e),
    };
    let settings = RunSettings { seed: args.seed, workers: args.workers, tolerance: args.tolerance };
    match run(&loaded, &args.out, &settings) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {} and {}", report.csv.display(), report.summary.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn config_failure(path: &std::path::Path, e: &ConfigError) -> ExitCode {
    eprintln!("error: invalid config {}: {e}", path.display());
    ExitCode::from(2)
}
