//! `masentropy` binary: runs datasets through coordination architectures,
//! extracts feature matrices, trains and applies the judger, and renders
//! analysis reports.
//!
//! Exit codes: 0 full success, 1 configuration/input errors, 2 partial
//! success (some samples failed; details on standard error).

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::CliError;

#[derive(Parser)]
#[command(
    name = "masentropy",
    version,
    about = "Token-entropy tracing, feature extraction and correctness prediction for multi-agent pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a dataset through one architecture and write a trace file.
    Run(RunArgs),
    /// Extract a feature matrix from a trace file.
    Features(FeaturesArgs),
    /// Train the judger ensemble on a feature matrix.
    Train(TrainArgs),
    /// Select one candidate per problem across matrices with a trained model.
    Judge(JudgeArgs),
    /// Render a calibration, causal-decomposition or quadrant report.
    Report(ReportArgs),
    /// Lint a trace file against the data-model invariants.
    Validate(ValidateArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// TOML configuration file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Architecture: single, sequential, centralized, debate or hybrid.
    #[arg(long)]
    pub arch: Option<String>,
    /// Rounds R (1..=5).
    #[arg(long)]
    pub rounds: Option<u32>,
    /// Dataset file (one problem per line).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output root; artifacts land in <out>/<run_id>/.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scripted mock backend (mutually exclusive with --endpoint).
    #[arg(long)]
    pub mock_script: Option<PathBuf>,
    /// Chat-completion server base URL (mutually exclusive with --mock-script).
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name sent to a live endpoint.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Concurrent samples (≥ 1).
    #[arg(long)]
    pub parallelism: Option<usize>,
}

#[derive(Args)]
pub struct FeaturesArgs {
    /// Trace file produced by `run`.
    #[arg(long)]
    pub traces: PathBuf,
    /// Single-agent R=1 trace file for the base-paired groups.
    #[arg(long)]
    pub base_traces: Option<PathBuf>,
    /// Feature group: mas, base-h or base-full.
    #[arg(long, default_value = "mas")]
    pub group: String,
    /// Matrix file to write (a manifest stamp lands alongside).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Feature matrix written by `features`.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Stratified cross-validation folds.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for model.json and cv_report.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct JudgeArgs {
    /// Trained model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Candidate matrices (repeat once per candidate source).
    #[arg(long = "matrix", required = true)]
    pub matrices: Vec<PathBuf>,
    /// Selection file to write (one record per shared problem).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Calibration,
    Causal,
    Quadrants,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Report to render.
    #[arg(value_enum)]
    pub kind: ReportKind,
    /// Feature matrix with labels (calibration).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Multi-round trace file (causal, quadrants).
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// Paired single-agent trace file (causal, quadrants).
    #[arg(long)]
    pub base_traces: Option<PathBuf>,
    /// Calibration bin count B.
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Text report path; the CSV export lands next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ValidateArgs {
    /// Trace file to lint.
    #[arg(long)]
    pub traces: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Cmd::Run(args) => commands::cmd_run(args),
        Cmd::Features(args) => commands::cmd_features(args),
        Cmd::Train(args) => commands::cmd_train(args),
        Cmd::Judge(args) => commands::cmd_judge(args),
        Cmd::Report(args) => commands::cmd_report(args),
        Cmd::Validate(args) => commands::cmd_validate(args),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Fatal(message)) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
