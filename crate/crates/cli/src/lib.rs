//! Command-line front end of `bismut-core`.
//!
//! Exit codes: `0` when every check passes, `1` when a check fails, `2` on a
//! usage or configuration error.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use bismut_core::verify::Suite;
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{ConfigError, ExperimentConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bismut", version, about = "Diffusions, Bismut gradient estimators and C1 bounds on model manifolds")]
pub struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Number of Monte Carlo paths.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Time step.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Single δ for bounds; replaces the sweep list too.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Default,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixArg {
    Config,
    Default,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare analytic Christoffel symbols and Ricci curvature with finite differences.
    GeometryCheck {
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Check every built-in model instead of the configured one.
        #[arg(long)]
        all: bool,
    },
    /// Simulate paths and dump them as CSV.
    Simulate {
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Run the configured Monte Carlo estimator.
    Estimate,
    /// Run a check suite and write the CSV, JSON and Markdown artifacts.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::Default)]
        suite: SuiteArg,
    },
    /// Print every constant and bound for the configuration as JSON.
    BoundsEval,
    /// Run a theorem matrix over the configured δ and r0 lists.
    Sweep {
        #[arg(long, value_enum, default_value_t = MatrixArg::Config)]
        matrix: MatrixArg,
    },
}

impl Cli {
    /// Loads the configuration and applies the flag overrides.
    pub fn config(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(n) = self.paths {
            cfg.estimator.paths = n;
        }
        if let Some(dt) = self.dt {
            cfg.estimator.dt = dt;
        }
        if let Some(d) = self.delta {
            cfg.bounds.delta = d;
            cfg.bounds.deltas = vec![d];
        }
        if let Some(s) = self.seed {
            cfg.estimator.seed = s;
        }
        if let Some(w) = self.workers {
            cfg.estimator.workers = w;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn dispatch(cli: &Cli) -> Result<bool, ConfigError> {
    let cfg = cli.config()?;
    match &cli.command {
        Command::GeometryCheck { points, all } => commands::geometry_check(&cfg, *points, *all),
        Command::Simulate { count } => commands::simulate(&cfg, *count),
        Command::Estimate => commands::estimate(&cfg),
        Command::Verify { suite } => {
            let s = match suite {
                SuiteArg::Default => Suite::Default,
                SuiteArg::Full => Suite::Full,
            };
            commands::verify(&cfg, s)
        }
        Command::BoundsEval => commands::bounds_eval(&cfg),
        Command::Sweep { matrix } => {
            let m = match matrix {
                MatrixArg::Config => "config",
                MatrixArg::Default => "default",
                MatrixArg::Full => "full",
            };
            commands::sweep(&cfg, m)
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match dispatch(&cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("{e}");
            EXIT_USAGE
        }
    }
}
