use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid step law: {0}")]
    InvalidLaw(String),

    #[error("invalid cone: {0}")]
    InvalidCone(String),

    /// An exponent `a·z` exceeded the double-precision guard.
    #[error("exponent {exponent:.3} exceeds the overflow guard of {limit}")]
    Range { exponent: f64, limit: f64 },

    #[error("gradient of the jump generating function vanishes at ({0:.6}, {1:.6})")]
    ZeroGradient(f64, f64),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("ray does not meet the boundary of D")]
    NoIntersection,

    #[error("delta {0} too large: the shifted line misses D")]
    DeltaTooLarge(f64),

    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("branch mismatch: {0}")]
    Branch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// Numerical failures are distinguished from invalid input by the CLI exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::ZeroGradient(..) | Error::NoIntersection | Error::Range { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
