//! `hybridiq` command-line front end.
//!
//! Exit codes: 0 when every check passes, 2 when a check or validation
//! fails, 1 for unreadable input, malformed JSON and usage errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "hybridiq", version, about = "Hybrid classical-quantum states, operations and LOCC protocols")]
pub struct Cli {
    /// Root seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Replaces the numeric tolerances of `validate`.
    #[arg(long, global = true, value_parser = positive_f64)]
    pub tol: Option<f64>,
    /// Report destination; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check state, channel, kernel, space and protocol files.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Push a state through a channel pipeline and record per-step metrics.
    Evolve(EvolveArgs),
    /// Run an LOCC protocol on a bipartite state.
    Locc(LoccArgs),
    /// Correlation and distance measures of a state.
    Metrics(MetricsArgs),
    /// Run a randomized property suite.
    Properties {
        /// axioms, metric, channel, vieq, correlations or locc.
        suite: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Write a seeded random instance.
    Randgen(RandgenArgs),
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    pub state: PathBuf,
    /// Channels applied in order within each step.
    #[arg(required = true)]
    pub channels: Vec<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    /// Where to write the final state.
    #[arg(long = "final")]
    pub final_state: Option<PathBuf>,
    /// Adds a partial-transpose column for a `d1,d2` split of the quantum part.
    #[arg(long, value_parser = dims_pair)]
    pub bipartite: Option<(usize, usize)>,
}

#[derive(Debug, Args)]
pub struct LoccArgs {
    pub protocol: PathBuf,
    /// Input density matrix (matrix JSON).
    #[arg(long)]
    pub rho: PathBuf,
    /// Directory for the record-space channels and the initial record state.
    #[arg(long)]
    pub emit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub state: PathBuf,
    /// Second state for the distance.
    #[arg(long)]
    pub other: Option<PathBuf>,
    /// Non-interacting channel for a monotonicity report.
    #[arg(long)]
    pub channel: Option<PathBuf>,
    #[arg(long, value_parser = dims_pair)]
    pub bipartite: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RandKind {
    Space,
    Kernel,
    State,
    Channel,
    NonInteracting,
    Protocol,
}

#[derive(Debug, Args)]
pub struct RandgenArgs {
    #[arg(value_enum)]
    pub kind: RandKind,
    #[arg(long, default_value_t = 3)]
    pub cells: usize,
    /// Target cells for kernels and channels; defaults to `--cells`.
    #[arg(long)]
    pub dst_cells: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub qdim: usize,
    /// Output quantum dimension of general channels; defaults to `--qdim`.
    #[arg(long)]
    pub qdim_dst: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub branching: usize,
    /// Block rank of states; full rank when absent.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, value_parser = dims_pair, default_value = "2,2")]
    pub dims: (usize, usize),
    #[arg(long, default_value_t = 2)]
    pub rounds: usize,
    #[arg(long, default_value_t = 2)]
    pub max_outcomes: usize,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("{s:?} is not a positive number")),
    }
}

fn dims_pair(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => match (a.trim().parse::<usize>(), b.trim().parse::<usize>()) {
            (Ok(a), Ok(b)) if a > 0 && b > 0 => Ok((a, b)),
            _ => Err(format!("{s:?} is not a pair of positive integers")),
        },
        _ => Err(format!("expected d1,d2, got {s:?}")),
    }
}

fn configure_threads() {
    let Ok(value) = std::env::var("HYBRIDIQ_THREADS") else {
        return;
    };
    match value.trim().parse::<usize>() {
        Ok(0) => {}
        Ok(n) => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Err(_) => eprintln!("warning: ignoring HYBRIDIQ_THREADS={value:?}"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    configure_threads();
    match commands::dispatch(&cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(err.exit_code())
        }
    }
}
