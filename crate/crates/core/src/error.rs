use thiserror::Error;

/// Errors raised across the crate. Structural input problems are kept apart
/// from condition failures so callers can map them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Structural(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("numeric failure: {msg} (worst residual {worst:e})")]
    Numeric { msg: String, worst: f64 },
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("special divisor: {0}")]
    SpecialDivisor(String),
    #[error("degenerate divisor: {0}")]
    DegenerateDivisor(String),
    #[error("reality condition violated: {0}")]
    Reality(String),
    #[error("fiber identifications admit no joint section: {0}")]
    FiberIdentification(String),
    #[error("calibration failed: best residual {best:e} above threshold {threshold:e}")]
    Calibration {
        best: f64,
        threshold: f64,
        curve: Vec<(f64, f64)>,
    },
    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
