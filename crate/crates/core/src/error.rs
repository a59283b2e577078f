use thiserror::Error;

/// Errors raised by the numerical kernel, the models and the bound evaluators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular support: {0}")]
    SingularSupport(String),

    #[error("parameter {point:?} outside domain of model '{model}'")]
    Domain { model: String, point: Vec<f64> },

    #[error("Fock truncation too small: discarded tail weight {tail:e} exceeds {limit:e}")]
    TruncationTooSmall { tail: f64, limit: f64 },

    #[error("inconsistent POVM: outcome probabilities sum to {sum}")]
    InconsistentPovm { sum: f64 },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("inadmissible step: {0}")]
    Inadmissible(String),

    #[error("model file: {0}")]
    ModelFile(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used as the CLI error prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::SingularSupport(_) => "singular-support",
            Error::Domain { .. } => "domain",
            Error::TruncationTooSmall { .. } => "truncation",
            Error::InconsistentPovm { .. } => "inconsistent-povm",
            Error::SupportMismatch(_) => "support-mismatch",
            Error::Inadmissible(_) => "inadmissible",
            Error::ModelFile(_) | Error::Json(_) => "model-file",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
