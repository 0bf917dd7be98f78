use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("invalid window `{token}`: {reason}")]
    InvalidWindow { token: String, reason: String },

    #[error("invalid direction list `{token}`: {reason}")]
    InvalidDirections { token: String, reason: String },

    #[error("window pairing |{value:e}| is below the degeneracy floor {floor:e}")]
    PairingDegenerate { value: f64, floor: f64 },

    #[error("directions are linearly dependent (smallest singular value {sigma_min:e})")]
    DependentDirections { sigma_min: f64 },

    #[error("identity-completed change-of-variables matrix is singular (det {det:e})")]
    SingularB { det: f64 },

    #[error("complex frequency too large: max |2π t·η| = {exponent} exceeds 700")]
    EtaTooLarge { exponent: f64 },

    #[error("operation requires the canonical coordinate frame e^k")]
    NonCanonicalFrame,

    #[error("no shift points of the coefficient field lie in the query ball")]
    EmptyBall,

    #[error("invalid cone query: {0}")]
    InvalidQuery(String),

    #[error("window precondition violated: {0}")]
    WindowPrecondition(String),

    #[error("unknown or unsupported signal kind: {0}")]
    UnknownKind(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Coarse classification used by front ends to choose exit codes.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io(_) | Error::Format(_) | Error::Json(_) => ErrorClass::Io,
            Error::PairingDegenerate { .. }
            | Error::SingularB { .. }
            | Error::EtaTooLarge { .. } => ErrorClass::Degenerate,
            _ => ErrorClass::Config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Io,
    Degenerate,
}
