//! Taylor extension of kernel component pairs to complex arguments near the
//! real axis. Derivatives are generated recursively from the defining
//! differential system of each family, never by differencing.

use super::airy::airy_pair;
use super::bessel::bessel_j_triple_unchecked;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Which component of the (phi, psi) pair to extend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Phi,
    Psi,
}

/// Base kernel family tag for the extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseFamily {
    Airy,
    Bessel { nu: f64 },
    Sine,
}

const MAX_DELTA: f64 = 1.0e-6;
pub(crate) const MAX_ORDER: usize = 8;

/// (phi, psi) at t0 + delta for a base family, |delta| <= 1e-6.
pub fn component_pair_complex(family: BaseFamily, t0: f64, delta: Complex64) -> Result<(Complex64, Complex64)> {
    if delta.norm() > MAX_DELTA {
        return Err(Error::Domain(format!(
            "taylor extension step |delta| = {} exceeds {MAX_DELTA}",
            delta.norm()
        )));
    }
    match family {
        BaseFamily::Airy => {
            let (ai, aip) = airy_pair(t0)?;
            // y'' = x y about t0: a[k+2] = (t0 a[k] + a[k-1]) / ((k+1)(k+2))
            let mut a = [0.0f64; MAX_ORDER + 3];
            a[0] = ai;
            a[1] = aip;
            for k in 0..=MAX_ORDER {
                let prev = if k >= 1 { a[k - 1] } else { 0.0 };
                a[k + 2] = (t0 * a[k] + prev) / (((k + 1) * (k + 2)) as f64);
            }
            let phi = eval_jet(&a[..=MAX_ORDER], delta);
            let psi = eval_jet_shift(&a[..=MAX_ORDER + 1], delta);
            Ok((phi, psi))
        }
        BaseFamily::Bessel { nu } => {
            if t0 <= 0.0 {
                return Err(Error::Domain(format!("bessel extension needs t0 > 0, got {t0}")));
            }
            let r = t0.sqrt();
            let (jm, j0, jp) = bessel_j_triple_unchecked(nu, r);
            // phi(x) = J_nu(sqrt x), psi(x) = sqrt(x)/4 (J_(nu-1) - J_(nu+1))(sqrt x)
            let mut phi = [0.0f64; MAX_ORDER + 2];
            let mut psi = [0.0f64; MAX_ORDER + 2];
            phi[0] = j0;
            psi[0] = r / 4.0 * (jm - jp);
            // x phi' = psi ; x psi' = -(x - nu^2)/4 phi
            for k in 0..=MAX_ORDER {
                let kf = k as f64;
                phi[k + 1] = (psi[k] - kf * phi[k]) / (t0 * (kf + 1.0));
                let prev_phi = if k >= 1 { phi[k - 1] } else { 0.0 };
                psi[k + 1] = (-0.25 * ((t0 - nu * nu) * phi[k] + prev_phi) - kf * psi[k]) / (t0 * (kf + 1.0));
            }
            Ok((eval_jet(&phi[..=MAX_ORDER], delta), eval_jet(&psi[..=MAX_ORDER], delta)))
        }
        BaseFamily::Sine => {
            let s = PI.sqrt().recip();
            // phi = sin(x)/sqrt(pi): y'' = -y
            let mut a = [0.0f64; MAX_ORDER + 3];
            a[0] = s * t0.sin();
            a[1] = s * t0.cos();
            for k in 0..=MAX_ORDER {
                a[k + 2] = -a[k] / (((k + 1) * (k + 2)) as f64);
            }
            let phi = eval_jet(&a[..=MAX_ORDER], delta);
            let psi = eval_jet_shift(&a[..=MAX_ORDER + 1], delta);
            Ok((phi, psi))
        }
    }
}

/// Taylor extension of one component; the spec-facing operation.
pub fn taylor_extend(family: BaseFamily, which: Component, t0: f64, delta: Complex64) -> Result<Complex64> {
    let (phi, psi) = component_pair_complex(family, t0, delta)?;
    Ok(match which {
        Component::Phi => phi,
        Component::Psi => psi,
    })
}

/// sum a[k] delta^k, truncated once two consecutive terms drop below 1e-30 relative.
fn eval_jet(a: &[f64], delta: Complex64) -> Complex64 {
    let mut acc = Complex64::default();
    let mut dk = Complex64::new(1.0, 0.0);
    let mut small_runs = 0;
    for &c in a {
        let term = dk * c;
        acc += term;
        if term.norm() < 1e-30 * acc.norm().max(1e-300) {
            small_runs += 1;
            if small_runs >= 2 {
                break;
            }
        } else {
            small_runs = 0;
        }
        dk *= delta;
    }
    acc
}

/// sum (k+1) a[k+1] delta^k: derivative of the jet.
fn eval_jet_shift(a: &[f64], delta: Complex64) -> Complex64 {
    let mut acc = Complex64::default();
    let mut dk = Complex64::new(1.0, 0.0);
    let mut small_runs = 0;
    for k in 1..a.len() {
        let term = dk * (a[k] * k as f64);
        acc += term;
        if term.norm() < 1e-30 * acc.norm().max(1e-300) {
            small_runs += 1;
            if small_runs >= 2 {
                break;
            }
        } else {
            small_runs = 0;
        }
        dk *= delta;
    }
    acc
}
