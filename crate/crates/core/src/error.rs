use thiserror::Error;

/// Errors surfaced by the library. Validation errors carry the offending
/// field path so the CLI can report them verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed at `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("memory budget exceeded: {requested} bytes requested, budget is {budget}")]
    MemoryBudget { requested: u64, budget: u64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("numerical fault: {0}")]
    NumericalFault(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code contract: 2 for validation errors, 3 for numerical
    /// faults, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. }
            | Error::MemoryBudget { .. }
            | Error::GridMismatch(_)
            | Error::DegenerateInput(_) => 2,
            Error::NumericalFault(_) => 3,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
