//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("label value {value} out of range for {num_classes} classes")]
    LabelOutOfRange { value: u8, num_classes: usize },

    #[error("invalid value in {context}: {reason}")]
    Domain { context: String, reason: String },

    #[error("numeric fault in {site}: non-finite value encountered")]
    NumericFault { site: String },

    #[error("degenerate threshold state: {0}")]
    DegenerateThresholds(String),

    #[error("model architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("dataset generation infeasible: {0}")]
    Infeasible(String),

    #[error("unmapped mask color ({0}, {1}, {2})")]
    UnmappedColor(u8, u8, u8),

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(context: impl Into<String>, expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            context: context.into(),
            expected: expected.into(),
            actual: actual.into(),
        }
    }

    pub fn domain(context: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Domain {
            context: context.into(),
            reason: reason.into(),
        }
    }

    pub fn numeric(site: impl Into<String>) -> Self {
        Error::NumericFault { site: site.into() }
    }

    /// Process exit code for the CLI: 0 success, 2 usage, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::NumericFault { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
