use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SdwError {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("grid rejected: {0}")]
    Grid(String),

    #[error(
        "singular row integral did not converge at row {row} (x = {x:e}, estimate {estimate:e})"
    )]
    SingularRow { row: usize, x: f64, estimate: f64 },

    #[error("fixed-point iteration did not converge in {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("iterate increased by {increase:e} at x = {x:e} in step {iteration}")]
    NonMonotone {
        iteration: usize,
        x: f64,
        increase: f64,
    },

    #[error(
        "quadrature for {what} missed its target: error estimate {estimate:e}, target {target:e}"
    )]
    Quadrature {
        what: String,
        estimate: f64,
        target: f64,
    },

    #[error("optimizer could not bracket a minimum: {message}")]
    Bracket {
        message: String,
        samples: Vec<(f64, f64)>,
    },
}

impl SdwError {
    /// True for failures of the numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, SdwError::Domain(_) | SdwError::Grid(_))
    }
}

pub type Result<T> = std::result::Result<T, SdwError>;
