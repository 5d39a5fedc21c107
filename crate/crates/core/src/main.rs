//! Command-line front end: one subcommand per workflow, one process per run.
//!
//! Exit codes: 0 success / all checks passed, 1 validation error,
//! 2 numerical check failure, 3 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scatterlab::cli::{self, CheckSelection};
use scatterlab::Error;

#[derive(Parser)]
#[command(
    name = "scatterlab",
    version,
    about = "Phaseless far-field laboratory for spherical scatterers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesise the three phaseless datasets from a run configuration.
    Synth {
        #[arg(long)]
        config: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the relative noise level.
        #[arg(long)]
        noise: Option<f64>,
        /// Also dump the complex far fields for oracle tests.
        #[arg(long)]
        debug_phased: bool,
    },
    /// Run the structural identity checks.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// all | reciprocity | mixed | translation | optical | admissible
        #[arg(long, default_value = "all")]
        which: String,
        /// Write the verdicts as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover relative-phase cosines from a stored dataset.
    Retrieve {
        #[arg(long)]
        dataset: PathBuf,
        /// Directory with the phased truth tables (from --debug-phased).
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit sphere parameters to a stored dataset.
    Invert {
        #[arg(long)]
        dataset: PathBuf,
        /// Run configuration with an "invert" section (start guess, weights).
        #[arg(long)]
        config: PathBuf,
        /// Override the evaluation budget.
        #[arg(long)]
        budget: Option<usize>,
        /// Output directory for recovered.json and trace.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the translation-ambiguity misfit profile (plane-only vs full).
    DemoInvariance {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Synth {
            config,
            out,
            seed,
            noise,
            debug_phased,
        } => {
            cli::cmd_synth(&config, &out, seed, noise, debug_phased)?;
            Ok(0)
        }
        Command::Check { config, which, out } => {
            let selection: CheckSelection = which.parse()?;
            let reports = cli::cmd_check(&config, selection, out.as_deref())?;
            if reports.iter().all(|r| r.pass) {
                Ok(0)
            } else {
                Ok(2)
            }
        }
        Command::Retrieve {
            dataset,
            truth,
            out,
        } => {
            cli::cmd_retrieve(&dataset, truth.as_deref(), out.as_deref())?;
            Ok(0)
        }
        Command::Invert {
            dataset,
            config,
            budget,
            out,
        } => {
            cli::cmd_invert(&dataset, &config, budget, &out)?;
            Ok(0)
        }
        Command::DemoInvariance { config, out } => {
            cli::cmd_demo_invariance(&config, &out)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
