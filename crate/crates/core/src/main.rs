use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use solenoid_lab::harness::{run_with_threads, ExperimentConfig, ExperimentKind};

/// Numerical experiments on partially volume expanding solenoids.
#[derive(Parser)]
#[command(name = "solenoid-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov spectrum along one orbit.
    Lyapunov(RunArgs),
    /// Partial volume expansion constant over attractor samples.
    Pve(RunArgs),
    /// Cone-field conditions at sampled points.
    Cones(RunArgs),
    /// Physical-measure census over an initial-condition grid.
    Census(RunArgs),
    /// Push-forwards of u-curves.
    Ustate(RunArgs),
    /// Birkhoff averages of log|det Df| from uniform samples.
    Thm3(RunArgs),
    /// Tail fractions of volume growth against exp(-nr).
    BcDecay(RunArgs),
    /// Expansion constant, census, u-states and the center-exponent check.
    Report(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; its `kind` is replaced by the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn split(cmd: Command) -> (ExperimentKind, RunArgs) {
    match cmd {
        Command::Lyapunov(a) => (ExperimentKind::Lyapunov, a),
        Command::Pve(a) => (ExperimentKind::Pve, a),
        Command::Cones(a) => (ExperimentKind::Cones, a),
        Command::Census(a) => (ExperimentKind::Census, a),
        Command::Ustate(a) => (ExperimentKind::Ustate, a),
        Command::Thm3(a) => (ExperimentKind::Thm3, a),
        Command::BcDecay(a) => (ExperimentKind::BcDecay, a),
        Command::Report(a) => (ExperimentKind::Report, a),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<()> {
    let (kind, args) = split(Cli::parse().command);
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::new(kind),
    };
    cfg.kind = kind;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output = out;
    }
    if args.threads == Some(0) {
        anyhow::bail!("--threads must be at least 1");
    }
    let manifest = run_with_threads(&cfg, args.threads)?;
    println!("{}", serde_json::to_string_pretty(&manifest)?);
    Ok(())
}
