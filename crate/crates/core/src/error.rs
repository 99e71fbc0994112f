use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("line {line}: species `{name}` appears more than once in a complex")]
    DuplicateSpecies { line: usize, name: String },

    #[error("line {line}: rate constant must be positive and finite, got {value}")]
    NonPositiveRate { line: usize, value: f64 },

    #[error("line {line}: reactant complex equals product complex")]
    ReactantEqualsProduct { line: usize },

    #[error("network must have at least one species and one reaction")]
    EmptyNetwork,

    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("reaction index {index} out of range (network has {count} reactions)")]
    ReactionOutOfRange { index: usize, count: usize },

    #[error("applying the reaction would make coordinate {coordinate} negative")]
    NegativeState { coordinate: usize },

    #[error("cyclic class needs exactly 2 species, network has {0}")]
    NotTwoSpecies(usize),

    #[error("complex {0} occurs more than once in the cycle")]
    DuplicatedComplex(String),

    #[error("network is not in the cyclic two-species class: {0}")]
    NotCyclic(String),

    #[error("alpha coefficients must be strictly increasing: {0:?}")]
    AlphaNotIncreasing(Vec<u64>),

    #[error("excursion index {index} out of range 2..={max}")]
    ExcursionIndexOutOfRange { index: usize, max: usize },

    #[error("path leaves the non-negative orthant at step {step}")]
    InfeasiblePath { step: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("absorbing state: total rate is zero")]
    AbsorbingState,

    #[error("time {t} is beyond trajectory coverage (ends at {end})")]
    BeyondCoverage { t: f64, end: f64 },

    #[error("windows differ")]
    WindowMismatch,

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("communication class is empty inside the window")]
    EmptyClass,

    #[error("empty interior: {0}")]
    EmptyInterior(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
