use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Structural or numerical singularity during sparse factorization.
    /// Callers typically react by perturbing the shift.
    #[error("matrix is singular (pivot magnitude {pivot:e} at elimination step {step})")]
    Singular { step: usize, pivot: f64 },

    /// A quadrature point landed exactly on a Ritz-value image; the caller
    /// nudges the quadrature radius and retries.
    #[error("reduced system is singular at the requested point")]
    SingularReduced,

    #[error("Arnoldi starting vector has zero norm")]
    ZeroStart,

    #[error("QR iteration did not converge within the step budget")]
    NoConvergence,

    #[error("Krylov basis was not retained; rebuild the shift with keep_basis")]
    BasisNotRetained,

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
