use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cannot normalize at {point}: {reason} (multiplier {multiplier})")]
    Normalization {
        point: Complex64,
        multiplier: Complex64,
        reason: String,
    },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("overflow after {lifts} functional-equation lifts")]
    Overflow { lifts: u32 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("series diverges: Re s = {re_s} must exceed rho = {rho}")]
    Divergence { re_s: f64, rho: f64 },
    #[error("branch tracking failed: {0}")]
    Branch(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("ray is not escaping: {0}")]
    NotEscaping(String),
    #[error("not attracting: {0}")]
    NotAttracting(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
