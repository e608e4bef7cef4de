use std::io;

use thiserror::Error;

/// Errors raised by the freshness library.
///
/// Every message starts with the variant name so that callers (and the CLI)
/// can report which invariant was violated.
#[derive(Debug, Error)]
pub enum Error {
    #[error("BadShape: {0}")]
    BadShape(String),
    #[error("NegativeRate: off-diagonal entry q[{row}][{col}] = {value} is negative")]
    NegativeRate { row: usize, col: usize, value: f64 },
    #[error("BadDiagonal: q[{row}][{row}] = {value} differs from the negated row sum {expected}")]
    BadDiagonal {
        row: usize,
        value: f64,
        expected: f64,
    },
    #[error("NotIrreducible: state {state} cannot reach every other state (or be reached)")]
    NotIrreducible { state: usize },
    #[error("NonPositiveRate: {0}")]
    NonPositiveRate(String),
    #[error("SingularSystem: {0}")]
    SingularSystem(String),
    #[error("NotReversible: detailed balance violated by {violation:e}")]
    NotReversible { violation: f64 },
    #[error("EigenFailure: {0}")]
    EigenFailure(String),
    #[error("SingularResolvent: lambda*I - Q is not invertible at lambda = {lambda}")]
    SingularResolvent { lambda: f64 },
    #[error("DimensionMismatch: expected {expected} states, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("InvalidProximity: {0}")]
    InvalidProximity(String),
    #[error("PoleViolation: lambda = {lambda} is not above -min(d) = {bound}")]
    PoleViolation { lambda: f64, bound: f64 },
    #[error("OracleTooLarge: oracle supports at most {max} states, got {states}")]
    OracleTooLarge { states: usize, max: usize },
    #[error("MissingProximity: the FWC model requires a proximity matrix")]
    MissingProximity,
    #[error("NonPositiveParam: {0}")]
    NonPositiveParam(String),
    #[error("NotConcave: {0}")]
    NotConcave(String),
    #[error("InfeasibleBudget: total sampling budget must be positive, got {0}")]
    InfeasibleBudget(f64),
    #[error("NotTwoState: {0}")]
    NotTwoState(String),
    #[error("TooManySources: grid search supports at most {max} sources, got {count}")]
    TooManySources { count: usize, max: usize },
    #[error("ZeroIntensity: source {0} has zero transition intensity")]
    ZeroIntensity(String),
    #[error("BadParameters: {0}")]
    BadParameters(String),
    #[error("IoError: {0}")]
    Io(#[from] io::Error),
    #[error("IoError: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors originating from the file system rather than the model.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Csv(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
