use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),
    #[error("field is identically zero and cannot be amplitude encoded")]
    ZeroField,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("decoding a mixed state requires an ideal reference state")]
    MissingReference,
    #[error("channel strength {0} is outside [0, 1]")]
    StrengthOutOfRange(f64),
    #[error("qubit {qubit} out of range for a {qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, qubits: usize },
    #[error("invalid quantum state: {0}")]
    InvalidState(String),
    #[error("scalar minimisation failed: {0}")]
    NoConvergence(String),
    #[error("readout confusion matrix of qubit {0} is singular")]
    SingularConfusion(usize),
    #[error("at least 3 snapshots are needed for time differentiation, got {0}")]
    TooFewSnapshots(usize),
    #[error("least-squares system on the final support is rank deficient")]
    RankDeficient,
    #[error("solution exceeded the blow-up bound at t = {0}")]
    Unstable(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("unknown library term `{0}`")]
    UnknownTerm(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "invalid_spec",
            Error::ZeroField => "zero_field",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::MissingReference => "missing_reference",
            Error::StrengthOutOfRange(_) => "strength_out_of_range",
            Error::QubitOutOfRange { .. } => "qubit_out_of_range",
            Error::InvalidState(_) => "invalid_state",
            Error::NoConvergence(_) => "no_convergence",
            Error::SingularConfusion(_) => "singular_confusion",
            Error::TooFewSnapshots(_) => "too_few_snapshots",
            Error::RankDeficient => "rank_deficient",
            Error::Unstable(_) => "unstable",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::UnknownTerm(_) => "unknown_term",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
