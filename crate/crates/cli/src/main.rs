use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rollchain_cli::{load_config, run_experiment, ConfigError, ExperimentKind, Format, RunOptions};

#[derive(Parser)]
#[command(
    name = "rollchain",
    version,
    about = "Rolling blockchain experiments for sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Append and prune a single chain, checking it against an unbounded reference.
    ChainReplay(Common),
    /// Path probability between two nodes of random graphs over (n, L).
    Connectivity(Common),
    /// Path probability of roadside deployments under random link removal.
    AttackSweep(Common),
    /// Round-robin block creation and majority finalization on a topology.
    Protocol(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for Monte Carlo trials.
    #[arg(long)]
    threads: Option<usize>,
    /// Report format; overrides the config.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::ChainReplay(a) => (ExperimentKind::ChainReplay, a),
        Command::Connectivity(a) => (ExperimentKind::Connectivity, a),
        Command::AttackSweep(a) => (ExperimentKind::AttackSweep, a),
        Command::Protocol(a) => (ExperimentKind::Protocol, a),
    };
    let opts = RunOptions {
        seed: args.seed,
        out: args.out,
        format: args.format.map(|f| f.parse::<Format>().expect("clap restricts values")),
        threads: args.threads,
    };
    let result = load_config(&args.config).and_then(|config| run_experiment(config, kind, &opts));
    match result {
        Ok(manifest) => {
            for file in &manifest.files {
                println!("{file}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
