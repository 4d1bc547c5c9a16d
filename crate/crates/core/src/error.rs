use thiserror::Error;

/// Errors raised by every operation in the crate.
///
/// Each variant maps to a stable machine-readable code through [`Error::code`],
/// which the CLI reports verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symbol {symbol} is outside the alphabet of size {alphabet}")]
    OutOfRangeSymbol { symbol: usize, alphabet: usize },

    #[error("sequence is empty")]
    EmptySequence,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("operation requires a family with at least one free parameter")]
    ZeroDimensional,

    #[error("count lattice has {points} points, above the enumeration cap of {cap}")]
    IntractableEnumeration { points: u128, cap: u128 },

    #[error(
        "exact evaluation needs {points} lattice points, above the cap of {cap}; use Monte Carlo"
    )]
    ExactIntractable { points: u128, cap: u128 },

    #[error("horizon mismatch: expected n = {expected}, found n = {found}")]
    HorizonMismatch { expected: usize, found: usize },

    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),

    #[error("support violation at symbol {index}: p > 0 but q = 0")]
    SupportViolation { index: usize },

    #[error("invalid change points: {0}")]
    InvalidChangePoints(String),

    #[error("segment is empty")]
    EmptySegment,

    #[error("adjacent segments share model {0}")]
    AdjacentEqualModels(String),

    #[error("constraints are infeasible: {0}")]
    InfeasibleConstraints(String),

    #[error("split point {t} is not inside (0, {n})")]
    InvalidSplit { t: usize, n: usize },

    #[error("cannot parse model spec at position {position}: {message}")]
    SpecParse { position: usize, message: String },

    #[error("duplicate family member {0}")]
    DuplicateMember(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot write output: {0}")]
    Output(String),
}

impl Error {
    /// Stable identifier used in machine-readable error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::OutOfRangeSymbol { .. } => "OutOfRangeSymbol",
            Error::EmptySequence => "EmptySequence",
            Error::InvalidParams(_) => "InvalidParams",
            Error::ZeroDimensional => "ZeroDimensional",
            Error::IntractableEnumeration { .. } => "IntractableEnumeration",
            Error::ExactIntractable { .. } => "ExactIntractable",
            Error::HorizonMismatch { .. } => "HorizonMismatch",
            Error::AlphaOutOfRange(_) => "AlphaOutOfRange",
            Error::SupportViolation { .. } => "SupportViolation",
            Error::InvalidChangePoints(_) => "InvalidChangePoints",
            Error::EmptySegment => "EmptySegment",
            Error::AdjacentEqualModels(_) => "AdjacentEqualModels",
            Error::InfeasibleConstraints(_) => "InfeasibleConstraints",
            Error::InvalidSplit { .. } => "InvalidSplit",
            Error::SpecParse { .. } => "SpecParseError",
            Error::DuplicateMember(_) => "DuplicateMember",
            Error::InvalidFamily(_) => "InvalidFamily",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Output(_) => "OutputError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
