//! Batch front end: cohort files in, reports and diagnostics out.

pub mod cohort;
pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "idi", version, about = "Index date imputation for externally controlled trials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the marginal hazard ratio of a cohort with bootstrap inference.
    Analyze {
        cohort: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a Monte Carlo study of the configured scenario.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        reps: Option<usize>,
        /// Comma-separated subset of naive, weighting, matching.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Also write the first simulated cohort as cohort.csv.
        #[arg(long)]
        emit_cohort: bool,
    },
    /// Covariate balance and index-time Q–Q diagnostics.
    Diagnose {
        cohort: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
}

/// Parses `args` and runs the command; returns the text for stdout.
pub fn run<I, T>(args: I) -> CliResult<String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Input(String::new())
        }
        _ => CliError::input(e.to_string().trim_end()),
    })?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            if n == 0 {
                return Err(CliError::input("--threads must be at least 1"));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::input(e.to_string()))?
    };
    let overrides = commands::Overrides {
        seed: cli.seed,
        out_dir: cli.out_dir,
    };
    pool.install(|| match cli.command {
        Command::Analyze { cohort, config } => commands::analyze(&cohort, &config, &overrides),
        Command::Diagnose { cohort, config } => commands::diagnose_cmd(&cohort, &config, &overrides),
        Command::Simulate {
            config,
            reps,
            methods,
            emit_cohort,
        } => commands::simulate(
            &config,
            &commands::SimulateFlags {
                reps,
                methods,
                emit_cohort,
            },
            &overrides,
        ),
    })
}
