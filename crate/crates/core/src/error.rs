use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample {value} at node {node} (x = {x})")]
    NonFiniteSample { node: usize, x: f64, value: f64 },

    #[error("field length {found} does not match grid with {expected} nodes")]
    LengthMismatch { expected: usize, found: usize },

    #[error("grids do not match")]
    GridMismatch,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("eikonal solve did not converge after {iterations} sweeps (residual {residual:e})")]
    EikonalNotConverged { iterations: usize, residual: f64 },

    #[error("value field is stale: residual {residual:e} at node {node} exceeds {tolerance:e}")]
    StaleValueField {
        node: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("singular tridiagonal system at row {row} (condition estimate {condition:e})")]
    SingularSystem { row: usize, condition: f64 },

    #[error("square-root argument {value:e} is negative along the characteristic from r0 = {r0}")]
    CharacteristicInconsistent { r0: f64, value: f64 },

    #[error("closed form has a pole at t = {t}")]
    ClosedFormPole { t: f64 },

    #[error("no bracket for the implicit radial relation: {0}")]
    NoBracket(String),

    #[error("non-monotone bracket: {0}")]
    NonMonotone(String),

    #[error("ODE integration failed: {0}")]
    Ode(String),
}

pub type Result<T> = std::result::Result<T, Error>;
