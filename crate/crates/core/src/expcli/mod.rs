//! Experiment configuration and the command-line verbs.
//!
//! ```text
//! regtext run       --config exp.json [--out DIR] [--seed N] [--jobs N]
//! regtext grid      --config exp.json
//! regtext histogram --config exp.json [--checkpoint model.ckpt]
//! regtext splits    --config exp.json
//! regtext --print-defaults
//! ```
//!
//! Relative dataset and embedding paths resolve against `REGTEXT_DATA_DIR`.
//! Exit codes: 0 on success, 2 for missing files and usage errors, 1 otherwise.

mod commands;
mod config;
mod grid;
mod prepare;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

pub use commands::{cmd_histogram, cmd_run, cmd_splits, summary_line, write_histogram_csv, HistogramRow, RunOutcome};
pub use config::{DatasetConfig, EmbeddingConfig, ExperimentConfig, GridConfig, HistogramConfig, DATA_DIR_ENV};
pub use grid::{cells, cmd_grid, columns, CandidateResult, Column, GridCell, GridReport, GridTable};
pub use prepare::{load_corpus, prepare, Corpus};

#[derive(Debug, Parser)]
#[command(name = "regtext", version, about = "Train and evaluate regularized text classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run seed, overriding `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, overriding `jobs`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print the default config and exit.
    #[arg(long, global = true)]
    print_defaults: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train once, or `repeats` times with consecutive seeds.
    Run,
    /// Encoder by regime accuracy table with hyperparameter search per cell.
    Grid,
    /// Timestep contributions of a BiLSTM(MAX) checkpoint.
    Histogram {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Write the split manifest without training.
    Splits,
}

/// Parses `args` (program name first) and runs the verb. Returns the exit code.
pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_not_found() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if cli.print_defaults {
        print!("{}", ExperimentConfig::default().to_json()?);
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Error::config("command", "expected one of run, grid, histogram, splits"));
    };
    let path = cli
        .config
        .ok_or_else(|| Error::config("--config", "a config file is required"))?;
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    cfg.validate()?;
    match command {
        Command::Run => cmd_run(&cfg).map(drop),
        Command::Grid => cmd_grid(&cfg).map(drop),
        Command::Histogram { checkpoint } => cmd_histogram(&cfg, checkpoint.as_deref()).map(drop),
        Command::Splits => cmd_splits(&cfg).map(drop),
    }
}
