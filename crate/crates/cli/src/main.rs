//! `stickybm`: config-driven experiment runner.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric failure, 4 censored or
//! insufficient-data result (outputs are still written).

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use commands::{Failure, Outcome};
use config::Common;
use output::{git_blob_sha1, Manifest, OutputDir};

#[derive(Parser)]
#[command(name = "stickybm", version, about = "Sticky Brownian motion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the config (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; overrides the config (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sticky random walk paths for several κ from one uniform stream.
    SrwSim,
    /// Symmetrized Euler–Maruyama paths and terminal-position statistics.
    SemSim,
    /// Empirical versus analytic mean exit times.
    Mfpt,
    /// Feynman–Kac estimate of the heat equation with Feller boundary data.
    FkHeat,
    /// Feynman–Kac estimate of the stopped Poisson problem.
    FkPoisson,
    /// Method-of-lines reference solution of the heat equation.
    PdeRef,
    /// Transition rates between the ends of a sticky segment.
    Tpt,
    /// Feynman–Kac error against the reference solution over several h.
    Convergence,
    /// SEM exit times over a sweep of time steps beside the random walk.
    Compare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SrwSim => "srw-sim",
            Command::SemSim => "sem-sim",
            Command::Mfpt => "mfpt",
            Command::FkHeat => "fk-heat",
            Command::FkPoisson => "fk-poisson",
            Command::PdeRef => "pde-ref",
            Command::Tpt => "tpt",
            Command::Convergence => "convergence",
            Command::Compare => "compare",
        }
    }
}

fn run_with<T, F>(cli: &Cli, text: &str, path: &Path, f: F) -> Outcome
where
    T: DeserializeOwned + Serialize,
    F: FnOnce(&T, u64, &mut OutputDir) -> Outcome + Send,
    T: Sync,
{
    let (common, body): (Common, T) = config::parse(text).map_err(Failure::Config)?;
    let seed = cli.seed.or(common.seed).unwrap_or(0);
    let workers = cli.workers.or(common.workers);
    if workers == Some(0) {
        return Err(Failure::Config("`workers` must be at least 1".into()));
    }
    let out_path = cli.out.clone().or(common.out.clone().map(PathBuf::from)).unwrap_or_else(|| "out".into());
    let mut out = OutputDir::create(&out_path)?;
    let mut effective = serde_json::to_value(&body).map_err(|e| Failure::Config(e.to_string()))?;
    if let serde_json::Value::Object(m) = &mut effective {
        m.insert("seed".into(), seed.into());
        if let Some(w) = workers {
            m.insert("workers".into(), w.into());
        }
    }
    let result = stickybm::ensemble::with_workers(workers, || f(&body, seed, &mut out));
    // The manifest is written even for incomplete results so the artifacts
    // stay traceable.
    if matches!(result, Ok(()) | Err(Failure::Incomplete(_))) {
        out.finish(Manifest {
            command: cli.command.name(),
            config: effective,
            config_path: path.display().to_string(),
            input_sha1: git_blob_sha1(text.as_bytes()),
            seed,
            workers,
        })?;
    }
    result
}

fn run(cli: &Cli) -> Outcome {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("missing --config <path>".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    match cli.command {
        Command::SrwSim => run_with(cli, &text, path, commands::srw_sim),
        Command::SemSim => run_with(cli, &text, path, commands::sem_sim),
        Command::Mfpt => run_with(cli, &text, path, commands::mfpt),
        Command::FkHeat => run_with(cli, &text, path, commands::fk_heat_cmd),
        Command::FkPoisson => run_with(cli, &text, path, commands::fk_poisson_cmd),
        Command::PdeRef => run_with(cli, &text, path, commands::pde_ref),
        Command::Tpt => run_with(cli, &text, path, commands::tpt),
        Command::Convergence => run_with(cli, &text, path, commands::convergence),
        Command::Compare => run_with(cli, &text, path, commands::compare),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("numeric failure: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("i/o failure: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Incomplete(msg)) => {
            eprintln!("incomplete result: {msg}");
            ExitCode::from(4)
        }
    }
}
