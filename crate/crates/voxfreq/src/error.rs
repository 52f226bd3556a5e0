//! Error taxonomy shared by the library and mapped onto process exit codes
//! by the CLI.

use thiserror::Error;

/// Unified error type for all toolkit operations.
#[derive(Debug, Error)]
pub enum VoxError {
    /// Invalid argument or precondition violation (bad levels, degenerate
    /// dims, malformed flag values).
    #[error("argument error: {0}")]
    Argument(String),

    /// File exists but its contents violate the supported format subset.
    #[error("format error: {0}")]
    Format(String),

    /// File payload is shorter than its header promises or otherwise damaged.
    #[error("corrupt file: {0}")]
    Corrupt(String),

    /// A label code outside the active schema was encountered.
    #[error("schema violation: {0}")]
    SchemaViolation(String),

    /// Two inputs that must share geometry (or class count) do not.
    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    /// A structured input (subband set, probability grid) is internally
    /// inconsistent.
    #[error("structure error: {0}")]
    Structure(String),

    /// Input is degenerate for the requested statistic (e.g. empty
    /// normalization mask).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An ensemble or metric specification violates its invariants.
    #[error("spec error: {0}")]
    Spec(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl VoxError {
    /// Prefixes the message while keeping the error class (and with it the
    /// exit code).
    pub fn with_context(self, ctx: impl std::fmt::Display) -> VoxError {
        match self {
            VoxError::Argument(m) => VoxError::Argument(format!("{ctx}: {m}")),
            VoxError::Format(m) => VoxError::Format(format!("{ctx}: {m}")),
            VoxError::Corrupt(m) => VoxError::Corrupt(format!("{ctx}: {m}")),
            VoxError::SchemaViolation(m) => VoxError::SchemaViolation(format!("{ctx}: {m}")),
            VoxError::Incompatible(m) => VoxError::Incompatible(format!("{ctx}: {m}")),
            VoxError::Structure(m) => VoxError::Structure(format!("{ctx}: {m}")),
            VoxError::Degenerate(m) => VoxError::Degenerate(format!("{ctx}: {m}")),
            VoxError::Spec(m) => VoxError::Spec(format!("{ctx}: {m}")),
            other => other,
        }
    }

    /// Process exit code contract: 0 success, 1 I/O, 2 usage/validation,
    /// 3 computation failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            VoxError::Io(_) => 1,
            VoxError::Argument(_)
            | VoxError::Format(_)
            | VoxError::Corrupt(_)
            | VoxError::SchemaViolation(_)
            | VoxError::Incompatible(_)
            | VoxError::Spec(_) => 2,
            VoxError::Structure(_) | VoxError::Degenerate(_) | VoxError::Json(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, VoxError>;
