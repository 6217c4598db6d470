//! Crate-wide error type and the mapping onto CLI exit codes.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The covering-entropy integral does not converge at the origin.
    #[error("condition (intPsi3.16) fails: entropy integral diverges at 0 ({0})")]
    EntropyDivergent(String),

    /// The weight/N-function pair fails the admissibility integral test.
    #[error("not admissible (numerically divergent): {0}")]
    NotAdmissible(String),

    #[error("invalid spectral measure: {0}")]
    Measure(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("bound pipeline infeasible: {0}")]
    Infeasible(String),

    #[error("fingerprint mismatch: {0}")]
    FingerprintMismatch(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("simulation requires Gaussian y (set \"gaussian\": true with C_y = 1)")]
    NotGaussian,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit-code contract: 0 success, 1 verification failure, 2 config or
    /// precondition error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::VerificationFailed(_) => 1,
            _ => 2,
        }
    }
}
