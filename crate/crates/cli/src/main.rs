//! `holonomy` command-line driver.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Artifacts, Format};

#[derive(Parser, Debug)]
#[command(name = "holonomy", version, about = "Holonomy control of integrable systems on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides run.output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Ordered-exponential / integrator steps (overrides run.steps).
    #[arg(long, global = true)]
    steps: Option<usize>,

    /// Random seed (overrides run.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Action spectrum of the Hamiltonian.
    Spectrum,
    /// Direct classical integration and action transport.
    EvolveClassical,
    /// Dynamic factor, holonomy, and full evolution operators.
    EvolveQuantum,
    /// Holonomy operator along the configured path.
    Holonomy,
    /// Search for a loop realizing a target holonomy.
    Synthesize,
    /// Invariant suite; exits with 4 when a check fails.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::EvolveClassical => "evolve-classical",
            Command::EvolveQuantum => "evolve-quantum",
            Command::Holonomy => "holonomy",
            Command::Synthesize => "synthesize",
            Command::Verify => "verify",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config: a configuration file is required".into()))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("--config: cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(steps) = cli.steps {
        cfg.run.steps = steps;
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.run.output = out;
    }
    cfg.run.command = Some(cli.command.name().to_string());
    let sys = cfg.build()?;
    let out = Artifacts::new(&cfg.run.output, cfg.hash(), cli.format)?;
    let mut ctx = Context { cfg: &cfg, sys, out };
    let result = match cli.command {
        Command::Spectrum => commands::spectrum(&mut ctx),
        Command::EvolveClassical => commands::evolve_classical(&mut ctx),
        Command::EvolveQuantum => commands::evolve_quantum(&mut ctx),
        Command::Holonomy => commands::holonomy(&mut ctx),
        Command::Synthesize => commands::synthesize(&mut ctx),
        Command::Verify => commands::verify(&mut ctx),
    };
    for p in ctx.out.written() {
        println!("wrote {}", p.display());
    }
    result
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
