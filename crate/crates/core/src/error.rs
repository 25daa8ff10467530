use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not reach tolerance {tol:e} on [{lo}, {hi}] (last estimate {estimate}, error {error:e})")]
    Quadrature {
        lo: f64,
        hi: f64,
        tol: f64,
        estimate: f64,
        error: f64,
    },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("noise path leaves the V-coefficient space: {0}")]
    Range(String),

    #[error("inner solve failed at step {step} after {iterations} iterations (residual {residual:e})")]
    InnerSolve {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("solver contract violated: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed ensemble dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}
