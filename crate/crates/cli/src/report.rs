use std::path::PathBuf;

use proper_actions::Error;
use serde::Serialize;
use serde_json::{json, Value};

/// Version of the report envelope printed with `--json`.
pub const REPORT_SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize)]
pub struct CommandReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub tool_version: &'static str,
    pub inputs: Value,
    pub outcome: Value,
    pub timing_ms: f64,
}

impl CommandReport {
    pub fn new(command: &'static str, inputs: Value, outcome: Value, timing_ms: f64) -> CommandReport {
        CommandReport {
            schema_version: REPORT_SCHEMA_VERSION,
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            inputs,
            outcome,
            timing_ms,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite or null")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    /// Raised while building a witness.
    #[error("construction failed: {0}")]
    Construct(Error),
    /// A word-ball check failed.
    #[error("verification failed: {0}")]
    Verify(Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io { path: path.to_path_buf(), source }
    }

    /// Stable process exit codes.
    pub fn exit_code(&self) -> u8 {
        let (e, default) = match self {
            CliError::Io { .. } => return 2,
            CliError::Core(e) => (e, 2),
            CliError::Construct(e) => (e, 5),
            CliError::Verify(e) => (e, 6),
        };
        match e.root() {
            Error::BadParameters(_)
            | Error::UnsupportedFamily(_)
            | Error::KindMismatch(_)
            | Error::DimensionMismatch { .. }
            | Error::Json(_) => 2,
            Error::RankCapExceeded { .. } => 3,
            Error::PreconditionFailed(_) => 4,
            Error::OverflowRisk(_) | Error::BudgetExceeded { .. } => 7,
            _ => default,
        }
    }

    /// Stage tag of a construction error.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            CliError::Construct(Error::Stage { stage, .. }) | CliError::Core(Error::Stage { stage, .. }) => Some(stage),
            _ => None,
        }
    }
}

/// Outcome record of a command that failed before producing one.
pub fn error_outcome(e: &CliError) -> Value {
    json!({
        "error": e.to_string(),
        "exit_code": e.exit_code(),
        "stage": e.stage(),
    })
}
