//! Command-line front end: configuration, data ingestion, fits, studies
//! and machine-readable outputs.

mod commands;
mod config;
mod data;
mod output;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    build_model, cmd_coverage_study, cmd_fit, cmd_simulate, cmd_true_expectiles, execute, CommandOutcome,
};
pub use config::{
    apply_override, Command, DataConfig, RunConfig, ScenarioConfig, SplineDefaults, TermConfig, TermKind, OUTPUT_ENV,
};
pub use data::{parse_data, parse_table, Table};
pub use output::{fmt_f64, Manifest, RunRecord, MANIFEST_FILE};

/// A failure reported as one JSON line on stderr.
#[derive(Debug)]
pub struct CliError {
    /// Process exit status: 2 for usage and input errors, 1 for estimation failures.
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    /// Partial results to record before exiting.
    pub outcome: Option<Box<CommandOutcome>>,
}

impl CliError {
    pub fn usage(message: impl fmt::Display) -> Self {
        Self { code: 2, kind: "usage", message: message.to_string(), outcome: None }
    }

    pub fn estimation(message: impl fmt::Display) -> Self {
        Self { code: 1, kind: "estimation", message: message.to_string(), outcome: None }
    }

    pub fn io(message: impl fmt::Display) -> Self {
        Self { code: 1, kind: "io", message: message.to_string(), outcome: None }
    }

    pub fn with_outcome(mut self, outcome: CommandOutcome) -> Self {
        self.outcome = Some(Box::new(outcome));
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind, "code": self.code, "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(name = "geoexpectile", version, about = "Bayesian and frequentist geoadditive expectile regression")]
pub struct Cli {
    /// Worker threads for parallel fits and replications (default: available cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set chain.iterations=2000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory (overrides the config and the environment).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Fit expectile regression models to a data set.
    Fit(RunArgs),
    /// Point-estimation simulation study (RMSE).
    Simulate(RunArgs),
    /// Interval simulation study (coverage and widths).
    CoverageStudy(RunArgs),
    /// Tabulate expectiles of a built-in distribution.
    TrueExpectiles(RunArgs),
    /// Re-run a command from its manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn load_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    match &args.config {
        Some(path) => RunConfig::load(path, &args.overrides),
        None => {
            let cwd = std::env::current_dir().map_err(CliError::io)?;
            RunConfig::from_toml("", &args.overrides, &cwd)
        }
    }
}

/// Execute parsed arguments.
pub fn run(cli: Cli) -> Result<Manifest, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        // Fails only if a pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let (command, config, out_dir) = match cli.command {
        CliCommand::Rerun { manifest, output } => {
            let m = Manifest::load(&manifest)?;
            m.config.validate()?;
            (m.command, m.config, output.unwrap_or(m.output_dir))
        }
        CliCommand::Fit(a) => with_dir(Command::Fit, &a)?,
        CliCommand::Simulate(a) => with_dir(Command::Simulate, &a)?,
        CliCommand::CoverageStudy(a) => with_dir(Command::CoverageStudy, &a)?,
        CliCommand::TrueExpectiles(a) => with_dir(Command::TrueExpectiles, &a)?,
    };
    execute(command, &config, &out_dir)
}

fn with_dir(command: Command, args: &RunArgs) -> Result<(Command, RunConfig, PathBuf), CliError> {
    let config = load_config(args)?;
    let dir = config.output_dir(args.output.as_deref());
    let dir = std::path::absolute(&dir).unwrap_or(dir);
    Ok((command, config, dir))
}
