//! `finslerlab` command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
//! and configuration errors.

mod cmd;
mod model;
mod report;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "finslerlab", version, about = "Projectively flat (alpha, beta)-metrics: construction and verification")]
struct Cli {
    /// Worker threads for sample sweeps.
    #[arg(long, global = true, env = "FINSLERLAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Flatness checks on a model.
    Verify(cmd::VerifyArgs),
    /// Invariants and reduced form of a quadruple.
    Classify(cmd::ClassifyArgs),
    /// Geodesic traces with straightness deviation.
    Geodesics(cmd::GeodesicArgs),
    /// Forward and inverse chains on a model.
    Deform(cmd::DeformArgs),
    /// Tabulates φ and its residuals.
    Phi(cmd::PhiArgs),
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    if let Some(t) = cli.threads {
        if t == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match &cli.command {
        Command::Verify(a) => cmd::verify(a),
        Command::Classify(a) => cmd::classify(a),
        Command::Geodesics(a) => cmd::geodesics(a),
        Command::Deform(a) => cmd::deform(a),
        Command::Phi(a) => cmd::phi(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
