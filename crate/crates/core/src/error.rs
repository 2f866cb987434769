use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("sample count mismatch: expected {expected}, got {actual}")]
    SampleCount { expected: usize, actual: usize },

    #[error("unsupported derivative order {0} (supported: 1..=4)")]
    UnsupportedOrder(u32),

    #[error("input has non-zero mean {mean:e}; no periodic antiderivative exists")]
    NonIntegrable { mean: f64 },

    #[error("non-finite value in {field} at sample {index}")]
    NonFinite { field: String, index: usize },

    #[error("blow-up at t = {t}: field {field} exceeded the magnitude limit")]
    BlowUp { t: f64, field: usize },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("domain too small: tail/peak ratio {ratio:e} exceeds {limit:e}")]
    DomainTooSmall { ratio: f64, limit: f64 },

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("invalid phase point: constraint residual {residual:e} exceeds {limit:e}")]
    InvalidPhasePoint { residual: f64, limit: f64 },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
