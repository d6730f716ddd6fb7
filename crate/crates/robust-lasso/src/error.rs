use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },

    #[error("non-finite value at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no kernel space: reduce feature dimension (use TDCA)")]
    NoKernelSpace,

    #[error("path breakdown: {detail}")]
    PathBreakdown {
        detail: String,
        /// Valid portion of the path computed before the failure.
        prefix: Box<crate::plasso::path::RegularizationPath>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to.
    /// 2: usage or config errors, 3: data shape or content errors, 4: numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 2,
            Error::InvalidInput(_)
            | Error::ShapeMismatch { .. }
            | Error::NonFinite { .. }
            | Error::Parse { .. }
            | Error::NoKernelSpace
            | Error::Io(_)
            | Error::Json(_) => 3,
            Error::PathBreakdown { .. } | Error::Numerical(_) => 4,
        }
    }
}
