use thiserror::Error;

use crate::classical::KernelViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("not a density matrix: {0}")]
    NotAState(String),

    #[error("bad interval [{a}, {b}] with {cells} cells")]
    BadRange { a: f64, b: f64, cells: usize },
    #[error("bad cell weight {weight} at cell {cell}")]
    BadWeight { cell: usize, weight: f64 },
    #[error("map sends cell {cell} to {image}, outside 0..{len}")]
    BadMap { cell: usize, image: usize, len: usize },
    #[error("invalid Markov kernel: {0}")]
    BadKernel(KernelViolation),
    #[error("classical spaces do not match: {0}")]
    SpaceMismatch(String),

    #[error("cell {0} carries a non-positive mass block")]
    NotPositive(usize),
    #[error("total trace {0} differs from 1")]
    NotNormalized(f64),
    #[error("invalid effect: {0}")]
    BadEffect(String),
    #[error("invalid event: {0}")]
    BadEvent(String),
    #[error("cell {0} has zero probability")]
    ZeroMassCell(usize),
    #[error("conditioning on an effect with probability {0}")]
    ZeroProbability(f64),

    #[error("channel is incomplete at source cell {cell} (deviation {deviation:.3e})")]
    IncompleteChannel { cell: usize, deviation: f64 },
    #[error("Kraus set is incomplete (deviation {0:.3e})")]
    IncompleteKraus(f64),
    #[error("block shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("coefficient matrix at (m={m}, n={n}) is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPSDCoefficients { m: usize, n: usize, min_eigenvalue: f64 },
    #[error("operator basis is invalid: {0}")]
    BadBasis(String),
    #[error("channel is not non-interacting")]
    NotNonInteracting,

    #[error("not an ensemble: {0}")]
    NotAnEnsemble(String),

    #[error("instrument incomplete or missing for history {history:?}: {reason}")]
    IncompleteInstrument { history: Vec<usize>, reason: String },
    #[error("record space has {0} cells, above the limit of 100000")]
    RecordSpaceTooLarge(usize),
    #[error("invalid protocol: {0}")]
    BadProtocol(String),

    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown property suite {0:?}")]
    UnknownSuite(String),
}

impl Error {
    /// Variant name, used as a stable identifier in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NonFinite => "NonFinite",
            Error::NotAState(_) => "NotAState",
            Error::BadRange { .. } => "BadRange",
            Error::BadWeight { .. } => "BadWeight",
            Error::BadMap { .. } => "BadMap",
            Error::BadKernel(_) => "BadKernel",
            Error::SpaceMismatch(_) => "SpaceMismatch",
            Error::NotPositive(_) => "NotPositive",
            Error::NotNormalized(_) => "NotNormalized",
            Error::BadEffect(_) => "BadEffect",
            Error::BadEvent(_) => "BadEvent",
            Error::ZeroMassCell(_) => "ZeroMassCell",
            Error::ZeroProbability(_) => "ZeroProbability",
            Error::IncompleteChannel { .. } => "IncompleteChannel",
            Error::IncompleteKraus(_) => "IncompleteKraus",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::NotPSDCoefficients { .. } => "NotPSDCoefficients",
            Error::BadBasis(_) => "BadBasis",
            Error::NotNonInteracting => "NotNonInteracting",
            Error::NotAnEnsemble(_) => "NotAnEnsemble",
            Error::IncompleteInstrument { .. } => "IncompleteInstrument",
            Error::RecordSpaceTooLarge(_) => "RecordSpaceTooLarge",
            Error::BadProtocol(_) => "BadProtocol",
            Error::Parse(_) => "Parse",
            Error::UnknownSuite(_) => "UnknownSuite",
        }
    }
}
