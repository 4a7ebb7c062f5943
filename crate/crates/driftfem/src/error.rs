//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A coefficient field could not be evaluated (declared singular point,
    /// non-finite value, or out-of-range data).
    #[error("field evaluation failed at ({x}, {y}): {reason}")]
    FieldEval { x: f64, y: f64, reason: String },

    /// A coefficient set violates one of the admissibility conditions
    /// (ellipticity, drift divergence sign, nonnegative reaction).
    #[error("coefficient validation failed: {0}")]
    Validation(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The linear system is structurally or numerically singular.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// The iterative solver stalled before reaching the target residual.
    #[error("solver did not converge: best residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    /// Malformed expression in a coefficient definition.
    #[error("expression error: {0}")]
    Expr(String),

    /// Malformed run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
