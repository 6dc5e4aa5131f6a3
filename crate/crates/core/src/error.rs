use thiserror::Error;

/// Errors raised by the geometry, kernel and verification layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} outside supported range 1..={max}", max = crate::linalg::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("point is not strictly inside the unit ball (|z|^2 = {0})")]
    OutsideBall(f64),

    #[error("non-finite coordinate")]
    NonFinite,

    #[error("unitary undefined at origin; use identity explicitly")]
    UnitaryAtOrigin,

    #[error("too close to boundary for requested precision (|z| = {0})")]
    TooCloseToBoundary(f64),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("radius_cap too aggressive for K_max limit (cap {radius_cap}, limit {limit})")]
    TruncationLimit { radius_cap: f64, limit: usize },

    #[error("insufficient distance spread: {0}")]
    InsufficientSpread(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, LabError>;
