use thiserror::Error;

use crate::statekit::Ket;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("tensor ordering violated: {0}")]
    Ordering(String),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("operator is not hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("pre- and post-selected states are orthogonal (|<post|pre>| = {0:e}); weak value undefined")]
    OrthogonalSelection(f64),

    #[error("measurement strength {0} is too small to normalize readouts")]
    ZeroStrength(f64),

    #[error("invalid meter configuration: {0}")]
    InvalidMeter(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("unknown mode or path `{0}`")]
    UnknownMode(String),

    #[error("circuit must be calibrated first")]
    CalibrationRequired,

    #[error("no calibration solution: {0}")]
    NoSolution(String),

    #[error("meter state is not of the (delta, eps, eps, eps) form: {reason}")]
    NotMeterForm { ket: Box<Ket>, reason: String },

    #[error("invalid source configuration: {0}")]
    InvalidSource(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid shot plan: {0}")]
    InvalidPlan(String),

    #[error("all coincidence counts are zero")]
    AllZeroCounts,

    #[error("empty strength grid")]
    EmptyGrid,

    #[error("phase grid has {0} points; at least 8 are required")]
    GridTooShort(usize),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    /// Domain errors are the ones a caller can trigger with well-formed but
    /// physically meaningless input (orthogonal selection, zero strength).
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::OrthogonalSelection(_) | Error::ZeroStrength(_) | Error::AllZeroCounts
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
