use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("level index {index} on axis {axis} is out of range 0..{levels}")]
    IndexOutOfRange { axis: usize, index: u32, levels: u32 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "delta {delta} is not a multiple of the grid spacing {spacing}; nearest admissible values are {below} and {above}"
    )]
    InvalidDelta {
        delta: f64,
        spacing: f64,
        below: f64,
        above: f64,
    },

    #[error("axis {axis} has no unblocked levels left")]
    AvailabilityExhausted { axis: usize },

    #[error("rejection budget of {attempts} attempts exceeded while sampling a point")]
    RejectionBudgetExceeded { attempts: usize },

    #[error("points {} and {} coincide on subspace {subspace:?}", .pair.0, .pair.1)]
    DegenerateProjection {
        subspace: Vec<usize>,
        pair: (usize, usize),
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "maximal permissible design reached {achieved} of {required} points; use a denser grid (larger L) or a smaller delta"
    )]
    MaximalityViolation { achieved: usize, required: usize },

    #[error("enumeration exceeded the cap of {limit} designs")]
    EnumerationTooLarge { limit: u64 },

    #[error("no permissible design of size {runs} exists")]
    NoFeasibleDesign { runs: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
