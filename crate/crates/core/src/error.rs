//! Error type shared by every solver in the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AfError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AfError {
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("relay gain direction is identically zero")]
    DegenerateDirection,

    #[error("relay gain is identically zero; normalized SNR is 0/0")]
    DegenerateGain,

    #[error("no source-relay-destination path carries signal; capacity is zero")]
    Disconnected,

    #[error("gain family direction vanishes at theta = {theta}")]
    DegenerateAngle { theta: f64 },

    #[error("rate weights must be non-negative with a positive sum, got ({mu1}, {mu2})")]
    InvalidWeights { mu1: f64, mu2: f64 },

    #[error("relay gain is infeasible: uses power {used}, budget is {budget}")]
    Infeasible { used: f64, budget: f64 },

    #[error("power split alpha = {0} lies outside [0, 1]")]
    AlphaOutOfRange(f64),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
