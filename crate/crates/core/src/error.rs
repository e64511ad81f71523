use thiserror::Error;

/// Errors produced while configuring, assembling or integrating a simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("detector index {index} out of range for {count} detectors")]
    DetectorIndex { index: usize, count: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("singular matrix encountered during factorization at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical integration (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SolverFailure { .. } | Error::Singular { .. } | Error::NonFinite(_) => true,
            Error::Step { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
