use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("width {width} exceeds the dense-matrix guard of {max} qubits")]
    WidthGuard { width: usize, max: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("single-qubit slot mismatch: plan expects {expected}, circuit has {found}")]
    SlotMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("degenerate spectrum: {0}")]
    Degenerate(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("replay mismatch for {0}")]
    ReplayMismatch(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps the error with a description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Whether the root cause is a malformed configuration or input file
    /// rather than a numerical failure.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::Json(_) => true,
            Error::Context { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub trait ResultExt<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| e.context(context()))
    }
}

pub(crate) fn ensure_finite(value: f64, what: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

pub(crate) fn ensure_probability(value: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} = {value} is not a probability in [0, 1]"
        )))
    }
}
