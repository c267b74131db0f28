use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A space description violates its family invariants.
    #[error("invalid space spec: {0}")]
    InvalidSpec(String),

    /// Input text (JSON or the space mini-language) could not be parsed.
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid optimisation budget: {0}")]
    InvalidBudget(String),

    /// A seed handed to an optimiser lies outside the feasible set.
    #[error("seed {index} is infeasible (gauge {gauge})")]
    InfeasibleSeed { index: usize, gauge: f64 },

    #[error("objective returned a non-finite value")]
    NonFiniteObjective,

    /// The operation needs an analytic Köthe dual that is not available.
    #[error("no analytic Köthe dual for {0}")]
    UnknownDual(String),

    /// A precondition on the space (perfectness, unit-vector normalisation) fails.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("representation does not reconstruct the tensor (residual {residual:e})")]
    Reconstruction { residual: f64 },
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Malformed(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
