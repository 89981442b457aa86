//! Special functions and quadrature primitives: Airy Ai/Ai', Bessel J_nu,
//! Gauss-Legendre rules, and Taylor extension of kernel component pairs to
//! complex arguments near the real axis.

mod airy;
mod bessel;
mod gamma;
mod quadrature;
mod taylor;

pub use airy::{airy_ai, airy_ai_prime, airy_pair, AI_ZERO, AIP_ZERO};
pub use bessel::{bessel_j, bessel_j_prime};
pub(crate) use bessel::bessel_j_triple_unchecked;
pub use gamma::gamma;
pub use quadrature::{gauss_legendre, QuadratureRule};
pub use taylor::{component_pair_complex, taylor_extend, BaseFamily, Component};
