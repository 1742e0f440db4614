use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes of the CLI.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum FfnsError {
    #[error(transparent)]
    Core(#[from] ffns_core::Error),
    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    ConfigInvalid(Vec<String>),
    #[error("Picard iteration is not contracting (update norms {log:?})")]
    ContractionFailure { log: Vec<f64> },
    #[error(
        "Picard iteration did not reach tol {tol:e} in {sweeps} sweeps (update norms {log:?})"
    )]
    ConvergenceFailure {
        tol: f64,
        sweeps: usize,
        log: Vec<f64>,
    },
    #[error("state error: {0}")]
    State(String),
    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FfnsError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FfnsError::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code for a run aborted by this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            FfnsError::ConfigParse { .. } | FfnsError::ConfigInvalid(_) => EXIT_CONFIG,
            FfnsError::Core(
                ffns_core::Error::Validation(_)
                | ffns_core::Error::Precondition(_)
                | ffns_core::Error::Hypothesis(_)
                | ffns_core::Error::WrongRegime(_),
            ) => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        }
    }
}

pub type Result<T> = std::result::Result<T, FfnsError>;
