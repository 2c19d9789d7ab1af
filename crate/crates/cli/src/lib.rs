//! Experiment runner: JSON configs in, CSV traces and JSON rate reports out.

pub mod config;
pub mod output;
pub mod problem;
pub mod runner;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{load_config, parse_config, plan_runs, ExperimentConfig, Issue, Kind, RunSpec};
pub use problem::{emit_problem_file, load_problem_file, parse_problem, Problem, ProblemError};
pub use runner::{prepare, run_experiment, Prepared, SummaryRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", format_issues(.0))]
    Validation(Vec<Issue>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_issues(issues: &[Issue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}
