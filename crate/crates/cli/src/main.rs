// SPDX-License-Identifier: MIT OR Apache-2.0

//! `culture-neurons`: simulate → aggregate → identify → mask → evaluate → report.
//!
//! Exit status: 0 on success, 1 for usage or configuration errors, 2 for data errors.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use culture_neurons::{Error, ErrorPolicy};

use config::{load_grouping, RunConfig, SelectorFlags};

#[derive(Debug, Parser)]
#[command(name = "culture-neurons", version, about = "Identify and ablate culture-sensitive MLP neurons")]
struct Cli {
    /// JSON run configuration (`selector`, `sim`, `correct_only`, `grouping`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an activation log and unmasked predictions from the toy decoder.
    Simulate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fold an activation log into per-culture statistics.
    Aggregate {
        #[arg(long)]
        actlog: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSON object mapping raw culture tags to grouped cultures.
        #[arg(long)]
        grouping: Option<PathBuf>,
        /// Only count samples answered correctly (default true).
        #[arg(long, value_name = "BOOL")]
        correct_only: Option<bool>,
        /// Skip invalid records instead of stopping at the first one.
        #[arg(long)]
        skip_invalid: bool,
    },
    /// Score neurons and write one mask per culture.
    Identify {
        #[arg(long)]
        stats: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        selector: SelectorFlags,
    },
    /// Run the simulator's evaluation split under each mask.
    Mask {
        /// Directory written by `simulate`.
        #[arg(long)]
        sim: PathBuf,
        /// Mask files or directories containing them.
        #[arg(long, required = true, num_args = 1..)]
        masks: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute accuracy-change and flip-rate matrices for the runs in a manifest.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        /// Unmasked prediction log; defaults to `full.predlog` next to the manifest.
        #[arg(long)]
        full: Option<PathBuf>,
        /// Statistics snapshot for the variance diagnostics.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        skip_invalid: bool,
    },
    /// Render a saved report as text, CSV matrices and plot data.
    Report {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn policy(skip: bool) -> ErrorPolicy {
    if skip {
        ErrorPolicy::Skip
    } else {
        ErrorPolicy::FailFast
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn run(cli: Cli) -> culture_neurons::Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate { out, seed } => {
            let mut sim = cfg.sim;
            if let Some(s) = seed {
                sim.seed = s;
            }
            commands::simulate(sim, &out)
        }
        Command::Aggregate {
            actlog,
            out,
            grouping,
            correct_only,
            skip_invalid,
        } => {
            let grouping = load_grouping(grouping.as_deref(), cfg.grouping)?;
            commands::aggregate(
                &actlog,
                &out,
                &grouping,
                correct_only.unwrap_or(cfg.correct_only),
                policy(skip_invalid),
            )
        }
        Command::Identify { stats, out, selector } => {
            let selector = selector.apply(cfg.selector)?;
            let paths = commands::identify(&stats, &out, &selector)?;
            emit(&paths.iter().map(|p| format!("{}\n", p.display())).collect::<String>());
            Ok(())
        }
        Command::Mask { sim, masks, out } => commands::mask(&sim, &masks, &out),
        Command::Evaluate {
            manifest,
            full,
            stats,
            out,
            skip_invalid,
        } => commands::evaluate(&manifest, full.as_deref(), stats.as_deref(), &out, policy(skip_invalid)).map(|_| ()),
        Command::Report { report, out } => {
            emit(&commands::report(&report, &out)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 1,
                _ => 2,
            })
        }
    }
}
