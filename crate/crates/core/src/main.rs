use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use rta_lindblad::config::{parse_config, Command};
use rta_lindblad::runner::{run, RunOptions};

#[derive(Parser)]
#[command(version, about = "Relaxation-time Lindblad simulations driven by TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the master equation and write a trajectory.
    Evolve(Flags),
    /// Evaluate the exact solution for a temperature schedule.
    Quench(Flags),
    /// Run a quench-time scaling experiment and fit its exponent.
    Scaling(Flags),
    /// Tabulate first-order occupation shifts for a chain with a local reservoir.
    Perturb(Flags),
    /// Fit the scaling exponents of the reference systems.
    Table1(Flags),
    /// Run the seeded invariant suite; exits nonzero on any failure.
    Validate(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's `output`, else the current directory).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads; 0 picks automatically.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Seed for randomized inputs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn execute(command: Command, flags: Flags) -> anyhow::Result<bool> {
    if flags.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(flags.threads)
            .build_global()
            .context("configuring thread pool")?;
    }
    let (text, base) = match &flags.config {
        Some(path) => (
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            path.parent().map(PathBuf::from).unwrap_or_default(),
        ),
        None => (String::new(), PathBuf::from(".")),
    };
    let cfg = parse_config(&text, &base, Some(command))?;
    let output_dir = flags
        .output
        .or_else(|| cfg.output.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| PathBuf::from("."));
    let outcome = run(
        &cfg,
        &text,
        &RunOptions {
            output_dir,
            seed: flags.seed,
        },
    )?;
    println!("{}", outcome.summary);
    Ok(outcome.success)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Cmd::Evolve(f) => (Command::Evolve, f),
        Cmd::Quench(f) => (Command::Quench, f),
        Cmd::Scaling(f) => (Command::Scaling, f),
        Cmd::Perturb(f) => (Command::Perturb, f),
        Cmd::Table1(f) => (Command::Table1, f),
        Cmd::Validate(f) => (Command::Validate, f),
    };
    match execute(command, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
