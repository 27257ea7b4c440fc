//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A sparsity entry or mask index points outside the variable range.
    #[error("structural error: {0}")]
    Structure(String),

    /// Invalid model, tableau, tracker, or simulation configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A stage or state value became non-finite.
    #[error("non-finite value at step {step} (t = {time})")]
    NonFinite { step: u64, time: f64 },

    /// Newton-Raphson did not converge within the iteration budget.
    #[error(
        "Newton-Raphson failed to converge at step {step} (t = {time}): \
         residual {residual:e} after {iterations} iterations"
    )]
    NewtonNoConvergence {
        step: u64,
        time: f64,
        residual: f64,
        iterations: usize,
    },

    /// LU factorization hit a zero pivot.
    #[error("singular matrix in LU factorization (dimension {dim}, pivot column {col})")]
    SingularMatrix { dim: usize, col: usize },

    /// A numeric evaluation produced a non-finite value outside the step loop.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
