use thiserror::Error;

/// Errors raised across the crate.
///
/// The three semantic classes are matched by the CLI to process exit codes.
#[derive(Debug, Error)]
pub enum GqcoError {
    /// An input violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// Inconsistent or missing configuration (missing expert, bad shapes, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// The request exceeds a hard resource bound.
    #[error("resource error: {0}")]
    Resource(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GqcoError {
    pub fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Self::Resource(msg.into())
    }

    /// Process exit code: 2 for configuration problems, 3 for resource limits, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Json(_) | Self::Format(_) => 2,
            Self::Resource(_) => 3,
            Self::Domain(_) | Self::Io(_) => 1,
        }
    }
}

pub type Result<T, E = GqcoError> = std::result::Result<T, E>;
