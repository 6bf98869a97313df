use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("convergence failure in {context}: {detail}")]
    ConvergenceFailure { context: &'static str, detail: String },

    #[error("method {method} unavailable: {reason}")]
    MethodUnavailable { method: &'static str, reason: String },

    #[error("truncation failure: {0}")]
    TruncationFailure(String),

    #[error("quadrature failure in {context}: estimate {estimate:e}, error {error:e}")]
    QuadratureFailure {
        context: &'static str,
        estimate: f64,
        error: f64,
    },

    #[error("mixture domain error: {0}")]
    MixtureDomainError(String),

    #[error("grid too coarse: dt = {dt} exceeds r/100 = {limit}")]
    GridTooCoarse { dt: f64, limit: f64 },
}

impl Error {
    /// Short stable name, used by the CLI when reporting failures.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "InvalidModel",
            Error::DomainError(_) => "DomainError",
            Error::PreconditionViolation(_) => "PreconditionViolation",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::MethodUnavailable { .. } => "MethodUnavailable",
            Error::TruncationFailure(_) => "TruncationFailure",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::MixtureDomainError(_) => "MixtureDomainError",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
