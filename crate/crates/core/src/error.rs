use thiserror::Error;

/// Errors surfaced by the numeric layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("particle density vanishes at locus t = {t}")]
    ZeroDensity { t: f64 },
    #[error("conditioning loci closer than the coincidence tolerance")]
    CoincidentLoci,
    #[error("locus {t} outside the kernel validity window")]
    LocusOutsideValidity { t: f64 },
    #[error("evaluation at a pole (x = locus with zero regularization)")]
    PoleAtLocus,
    #[error("linear system is singular: {0}")]
    SingularSystem(String),
    #[error("eigenvalue iteration failed to converge")]
    EigenNoConvergence,
    #[error("quadrature failed to converge: {0}")]
    QuadratureNoConvergence(String),
    #[error("step size underflow at s = {s}; problem too stiff for the tolerance")]
    StepUnderflow { s: f64 },
    #[error("dense evaluation point {s} outside the integrated range")]
    OutOfRange { s: f64 },
    #[error("unsupported kernel family for this operation: {0}")]
    UnsupportedFamily(String),
    #[error("unsupported route for this operation: {0}")]
    UnsupportedRoute(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
