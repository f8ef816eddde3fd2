use std::path::PathBuf;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: column '{column}' not found")]
    ColumnNotFound { path: PathBuf, column: String },
    #[error("{path}: line {line}: cannot parse '{value}' as a number")]
    Parse { path: PathBuf, line: u64, value: String },
    #[error("{path}: malformed CSV: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{0}: no values")]
    EmptySeries(PathBuf),
    #[error(transparent)]
    Core(#[from] lambertw_core::Error),
    #[error("did not converge: {0}")]
    NotConverged(String),
}

impl CliError {
    /// Process exit code: 1 for usage and input problems, 2 for domain and
    /// moment-restriction errors, 3 for non-convergence under `--strict`.
    pub fn exit_code(&self) -> i32 {
        use lambertw_core::Error as E;
        match self {
            CliError::Core(E::InvalidConfig(_)) => 1,
            CliError::Core(E::NonConvergence { .. }) | CliError::NotConverged(_) => 3,
            CliError::Core(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
