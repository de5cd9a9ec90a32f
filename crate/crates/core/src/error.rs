use thiserror::Error;

/// Errors produced by validation, solvers, and file parsing.
#[derive(Debug, Error)]
pub enum Error {
    /// Decimal odds must be finite and strictly greater than 1.
    #[error("invalid odds {0}: decimal odds must be finite and > 1")]
    InvalidOdds(f64),

    /// An event or market failed an input invariant.
    #[error("validation: {0}")]
    Validation(String),

    /// A file did not match the expected schema.
    #[error("schema: {0}")]
    Schema(String),

    /// The positive-cash assumption fails for this event: the closed-form
    /// scan either drove the active price mass to `Q_A >= 1` or activated
    /// every outcome (cash 0).
    #[error("event '{0}': no positive-cash optimum (full investment would be required)")]
    NoPositiveCash(String),

    /// The ticket menu is larger than the configured cap.
    #[error("ticket menu requires {required} tickets, exceeding the cap of {cap}")]
    MenuTooLarge { required: u128, cap: usize },

    /// The joint outcome space is larger than the configured cap.
    #[error("joint outcome space has {required} states, exceeding the cap of {cap}")]
    StateCapExceeded { required: u128, cap: usize },

    /// A stake vector produces nonpositive wealth in some joint state.
    #[error("infeasible stakes: wealth {wealth:.6e} <= 0 in joint state {state:?}")]
    InfeasibleStakes { state: Vec<usize>, wealth: f64 },

    /// An iterative solver ran out of iterations.
    #[error("solver did not converge within {max_iter} iterations (residual {residual:.3e})")]
    NoConvergence { max_iter: usize, residual: f64 },

    /// An outcome index does not exist for the given event.
    #[error("outcome index {index} out of range for event '{event}' ({len} outcomes)")]
    IndexOutOfRange {
        event: String,
        index: usize,
        len: usize,
    },

    /// A perturbation family failed a construction invariant.
    #[error("family: {0}")]
    Family(String),

    /// Log-log order estimation needs at least 3 strictly positive points.
    #[error("order estimation: {0}")]
    OrderEstimation(String),

    /// A sweep could not produce enough valid records to fit orders.
    #[error("sweep: {0}")]
    Sweep(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
