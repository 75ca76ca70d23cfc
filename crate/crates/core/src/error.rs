use thiserror::Error;

/// Errors raised by the simulator and protocol state machines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("Kraus set violates completeness by {deviation:e}")]
    IncompleteKraus { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("operator is not unitary (deviation {deviation:e})")]
    NonUnitary { deviation: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("count must be at least 1")]
    ZeroCount,

    #[error("check fraction {0} is outside [0, 0.5]")]
    InvalidCheckFraction(f64),

    #[error("grid step {0} must lie in (0, 0.5] and divide 1")]
    InvalidGridStep(f64),

    #[error("attack {strategy} cannot be used against {protocol}")]
    StrategyMismatch {
        strategy: &'static str,
        protocol: &'static str,
    },

    #[error("exhaustive enumeration limited to N <= {limit}, got {n}")]
    EnumerationTooLarge { n: usize, limit: usize },

    #[error("Case-4 yield stayed below {required} after {attempts} attempts")]
    YieldShortfall { required: usize, attempts: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
