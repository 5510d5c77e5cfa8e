use qmlab::QmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] QmError),
}

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const ASSERTION: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const DIMENSION: i32 = 3;
    pub const TRUNCATION: i32 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Input(_) | CliError::Io(_) => exit::INPUT,
            CliError::Model(QmError::DimensionMismatch(_)) => exit::DIMENSION,
            CliError::Model(QmError::Truncation(_)) => exit::TRUNCATION,
            CliError::Model(QmError::RouteMismatch { .. } | QmError::Reconstruction(_)) => exit::ASSERTION,
            CliError::Model(_) => exit::INPUT,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
