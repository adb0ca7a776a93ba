use thiserror::Error;

use crate::periodic::Coefficient;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid coefficient function: {0}")]
    InvalidFunction(String),

    #[error("coefficient {coefficient} has period {found}, expected the shared period {expected}")]
    PeriodMismatch {
        coefficient: Coefficient,
        expected: f64,
        found: f64,
    },

    #[error("{component} must be strictly positive to take its logarithm (got {value})")]
    Domain { component: &'static str, value: f64 },

    #[error("divergence at t = {t}: {reason}")]
    Divergence { t: f64, reason: String },

    #[error("integration exceeded {max_steps} steps before reaching t = {t1} (stopped at t = {t})")]
    MaxStepsExceeded { max_steps: usize, t: f64, t1: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("hypothesis inconsistency: {0}")]
    HypothesisInconsistency(String),

    #[error("no root of the averaged system found from {starts} starting points (best residual {best_residual:e})")]
    NoAveragedRoot { starts: usize, best_residual: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
