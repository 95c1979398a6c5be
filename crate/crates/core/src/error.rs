use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("solver failure{}: {reason}", in_which(*.subdomain))]
    SolverFailure {
        subdomain: Option<usize>,
        reason: String,
    },

    #[error("singular jacobian: {0}")]
    SingularJacobian(String),

    #[error("unsupported oracle: {0}")]
    UnsupportedOracle(String),

    #[error("hypothesis violated: DtN derivatives d1={d1}, d2={d2} do not have the same sign")]
    HypothesisViolated { d1: f64, d2: f64 },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("rejected override: {0}")]
    RejectedOverride(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

fn in_which(subdomain: Option<usize>) -> String {
    subdomain.map(|i| format!(" in subdomain {i}")).unwrap_or_default()
}

impl Error {
    /// Short machine-readable tag for the CLI and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::SolverFailure { .. } => "solver-failure",
            Error::SingularJacobian(_) => "singular-jacobian",
            Error::UnsupportedOracle(_) => "unsupported-oracle",
            Error::HypothesisViolated { .. } => "hypothesis-violated",
            Error::UnknownExperiment(_) => "unknown-experiment",
            Error::RejectedOverride(_) => "rejected-override",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }

    pub(crate) fn in_subdomain(self, id: usize) -> Self {
        match self {
            Error::SolverFailure { reason, .. } => Error::SolverFailure {
                subdomain: Some(id),
                reason,
            },
            Error::SingularJacobian(reason) => Error::SolverFailure {
                subdomain: Some(id),
                reason: format!("singular jacobian: {reason}"),
            },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
