//! Janossy densities, gap probabilities, and joint distributions of extremal
//! eigenvalues for integrable random-matrix kernels (Airy, Bessel, sine).
//!
//! Two independent computational routes are provided and cross-validated:
//! a Tracy-Widom system of ODEs in the interval endpoint, applied to the
//! gauge-transformed (particle-conditioned) kernel, and a Nystrom quadrature
//! discretization whose spectrum yields Fredholm determinants, counting
//! probabilities, and resolvents. A Monte Carlo sampler of Gaussian matrix
//! ensembles closes the loop against the analytic surfaces.

pub mod conditioning;
pub mod distributions;
pub mod dppcheck;
pub mod error;
pub mod fredholm;
pub mod kernel;
pub mod linalg;
pub mod odeengine;
pub mod poly;
pub mod twode;
pub mod sampler;
pub mod specfun;

pub use error::{Error, Result};
