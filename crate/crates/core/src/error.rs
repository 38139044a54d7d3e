use thiserror::Error;

/// Errors raised by the condenser toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid condenser: {0}")]
    InvalidCondenser(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("coincident pole: Green kernel evaluated with z = t")]
    CoincidentPole,

    #[error("unsupported curve: {0}")]
    UnsupportedCurve(String),

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("mass mismatch: expected {expected}, found {found}")]
    MassMismatch { expected: f64, found: f64 },

    #[error("empty measure")]
    EmptyMeasure,

    #[error("grid too coarse: {grid_n} samples, at least {required} required")]
    GridTooCoarse { grid_n: usize, required: usize },

    #[error("grid too close to a support: distance {distance:.3e} below {minimum:.3e}")]
    GridTooClose { distance: f64, minimum: f64 },

    #[error("evaluation budget exceeded after {evaluations} ratio evaluations")]
    BudgetExceeded { evaluations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
