use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("frequency argument must be nonzero")]
    ZeroFrequency,

    #[error("quadrature did not converge: estimated error {estimate:.3e} exceeds tolerance {tol:.3e}")]
    QuadratureNonConvergence { estimate: f64, tol: f64 },

    #[error("coefficient consistency check failed: {0}")]
    CoefficientCheck(String),

    #[error("unconfined potential: squared trap frequency {0:.6e} is not positive")]
    Unconfined(f64),

    #[error("unphysical covariance matrix: {0}")]
    Unphysical(String),

    #[error("fidelity is defined for undisplaced states; got mean ({0:.3e}, {1:.3e})")]
    DisplacedState(f64, f64),

    #[error("unstable variant: {0}")]
    Unstable(String),

    #[error("degenerate characteristic roots: separation {0:.3e}")]
    DegenerateRoots(f64),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
