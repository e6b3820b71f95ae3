//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("incidence digraph is not strongly connected")]
    NotIrreducible,
    #[error("symbol {0} has an all-zero incidence row or column")]
    DeadSymbol(String),
    #[error("metric exponent must be positive, got {0}")]
    BadAlpha(f64),
    #[error("bad incidence matrix: {0}")]
    BadIncidence(String),
    #[error("unknown symbol: {0}")]
    UnknownSymbol(String),
    #[error("word is not admissible")]
    Inadmissible,
    #[error("slope of map {index} must lie in (0,1), got {slope}")]
    BadSlope { index: usize, slope: f64 },
    #[error("open set condition violated: images of maps {0} and {1} have overlapping interiors")]
    OscViolation(usize, usize),
    #[error("image of map {0} exits [0,1]")]
    ImageEscape(usize),
    #[error("bad weight table: {0}")]
    BadWeightTable(String),
    #[error("eigensolver failed to converge")]
    NoConvergence,
    #[error("potential is not strongly regular: P(0) <= 0")]
    NotRegular,
    #[error("operation requires strictly negative weights")]
    NonNegativeWeight,
    #[error("brute-force cap exceeded: maximal word length {0} above cap {1}")]
    CapExceeded(usize, usize),
    #[error("series evaluated on or left of the critical line")]
    OnOrLeftOfCriticalLine,
    #[error("resolvent is singular")]
    SingularResolvent,
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("invalid query: {0}")]
    BadQuery(String),
}

pub type Result<T> = std::result::Result<T, Error>;
