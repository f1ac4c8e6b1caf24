//! Experiment harness around [`aqil_core`]: config parsing, named
//! experiment specs, CSV and weight-file persistence, summary tables,
//! regret reports, and optional SVG training curves.
//!
//! The binary in this crate exposes everything as the `aqil` CLI; the
//! library surface exists so integration tests can drive experiments
//! in-process.

pub mod config;
pub mod csv_io;
pub mod report;
pub mod runner;
pub mod svg;
pub mod weights_io;

use std::path::PathBuf;

use aqil_core::{EnvError, QnetError, TrainError};
use thiserror::Error;

pub use config::{parse_config, ExperimentSpec, DEFAULT_EVAL_EPISODES, DEFAULT_EVAL_SEED};
pub use report::{
    regret_reports, render_regret_reports, render_summary_table, summarize_run, PolicyValue,
    RegretReport, SummaryRow,
};
pub use runner::{
    evaluate_net_defaults, experiment_policy_value, expert_policy_value,
    expert_policy_value_defaults, run_experiment, write_run_reports, ExperimentResult, RunOutcome,
    EXPERT_POLICY_NAME,
};

/// Harness-level failures, split so the CLI can map them to exit codes:
/// anything wrong with user-supplied input is a config error (exit 1),
/// anything that breaks mid-run is a runtime error (exit 2).
#[derive(Debug, Error)]
pub enum AqilError {
    /// Bad experiment name, malformed config, or invalid hyperparameters.
    #[error("config error: {0}")]
    Config(String),
    /// Malformed content in a user-supplied data file.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    /// Filesystem failure.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Training aborted.
    #[error("training failure: {0}")]
    Train(TrainError),
    /// Simulation produced a non-finite state.
    #[error("environment failure: {0}")]
    Env(#[from] EnvError),
    /// Network construction or import failure.
    #[error("network failure: {0}")]
    Qnet(#[from] QnetError),
}

impl From<TrainError> for AqilError {
    fn from(e: TrainError) -> Self {
        match e {
            // Invalid hyperparameters are the caller's configuration, not a
            // runtime fault.
            TrainError::InvalidConfig(_)
            | TrainError::EmptyPhases
            | TrainError::ZeroEpisodePhase => AqilError::Config(e.to_string()),
            other => AqilError::Train(other),
        }
    }
}

impl AqilError {
    /// CLI exit code: 1 for configuration problems, 2 for runtime ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            AqilError::Config(_) | AqilError::Parse { .. } => 1,
            _ => 2,
        }
    }
}

/// Shorthand for tagging an IO error with its path.
pub(crate) fn io_err(path: &std::path::Path, source: std::io::Error) -> AqilError {
    AqilError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Build a located parse error for any file format the harness reads.
pub(crate) fn parse_fail_at<T>(
    origin: &std::path::Path,
    line: usize,
    msg: String,
) -> Result<T, AqilError> {
    Err(AqilError::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    })
}
