//! `ipsim`: run interacting-particle experiments from configuration files.
//!
//! Exit codes: 0 success, 1 configuration error, 2 rate-bound violation,
//! 3 failed assertion or oracle comparison. Nothing is written on failure.

mod config;
mod output;
mod registry;
mod run;

use std::fs;
use std::io::{self, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_config, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "ipsim",
    version,
    about = "Graphical-representation simulation of interacting particle systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file.
    config: PathBuf,
    /// Replace `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace `run.replicates`.
    #[arg(long)]
    replicates: Option<usize>,
    /// Replace `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            replicates: self.replicates,
            out: self.out.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write its outputs.
    Run {
        #[command(flatten)]
        args: RunArgs,
        /// Worker threads; defaults to the number of available cores.
        #[arg(long)]
        workers: Option<NonZeroUsize>,
        /// Drive the inner window of a coupling experiment with unrelated
        /// streams, to exercise the failure path.
        #[arg(long, hide = true)]
        inject_coupling_fault: bool,
    },
    /// Validate a configuration and print it fully resolved.
    Check {
        #[command(flatten)]
        args: RunArgs,
    },
    /// List models and functionals with their parameters.
    List,
    /// Write one replicate's events on the largest window as JSON lines.
    Trace {
        #[command(flatten)]
        args: RunArgs,
        /// Replicate index.
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
}

const CONFIG_ERROR: u8 = 1;
const RATE_BOUND: u8 = 2;
const FAILED: u8 = 3;

fn exit_code(e: &ipsim::Error) -> u8 {
    use ipsim::Error::*;
    match e {
        RateBoundViolation { .. } => RATE_BOUND,
        InvalidParameter { .. }
        | InvalidTemplate(_)
        | InvalidWindow(_)
        | DimensionMismatch { .. }
        | Unsupported(_)
        | InvalidInitialCondition(_)
        | StateSpaceTooLarge { .. } => CONFIG_ERROR,
        _ => FAILED,
    }
}

/// Writes to stdout; a closed pipe ends output quietly.
fn emit(bytes: &[u8]) -> Result<(), u8> {
    let mut out = io::stdout().lock();
    match out.write_all(bytes).and_then(|()| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
            eprintln!("error: writing to stdout: {e}");
            Err(FAILED)
        }
        _ => Ok(()),
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig, u8> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        CONFIG_ERROR
    })?;
    parse_config(&text, overrides).map_err(|errors| {
        for e in &errors {
            eprintln!("{}: {e}", path.display());
        }
        CONFIG_ERROR
    })
}

fn run(args: &RunArgs, workers: Option<NonZeroUsize>, inject_fault: bool) -> Result<(), u8> {
    let cfg = load(&args.config, &args.overrides())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        pool = pool.num_threads(n.get());
    }
    let pool = pool.build().map_err(|e| {
        eprintln!("error: cannot start worker pool: {e}");
        CONFIG_ERROR
    })?;
    let outcome = pool
        .install(|| run::execute(&cfg, inject_fault))
        .map_err(|e| {
            eprintln!("error: {e}");
            exit_code(&e)
        })?;
    if !outcome.passed() {
        let failed: Vec<&str> = outcome
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name)
            .collect();
        eprintln!("assertion failed: {}", failed.join(", "));
        eprint!("{}", output::summary_text(&cfg, &outcome));
        return Err(FAILED);
    }
    let written = output::write_all(&cfg, &outcome).map_err(|e| {
        eprintln!(
            "error: writing outputs to {}: {e}",
            cfg.output.directory.display()
        );
        CONFIG_ERROR
    })?;
    let listing: String = written
        .iter()
        .map(|p| format!("{}\n", p.display()))
        .collect();
    emit(listing.as_bytes())
}

fn check(args: &RunArgs) -> Result<(), u8> {
    let cfg = load(&args.config, &args.overrides())?;
    run::check(&cfg).map_err(|e| {
        eprintln!("{}: {e}", args.config.display());
        CONFIG_ERROR
    })?;
    let mut text = serde_json::to_string_pretty(&cfg).expect("config serializes");
    text.push('\n');
    emit(text.as_bytes())
}

fn trace(args: &RunArgs, replicate: u64) -> Result<(), u8> {
    let cfg = load(&args.config, &args.overrides())?;
    let events = run::trace(&cfg, replicate).map_err(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })?;
    emit(&events)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run {
            args,
            workers,
            inject_coupling_fault,
        } => run(args, *workers, *inject_coupling_fault),
        Command::Check { args } => check(args),
        Command::List => emit(registry::listing().as_bytes()),
        Command::Trace { args, replicate } => trace(args, *replicate),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
