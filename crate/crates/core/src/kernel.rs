//! Integrable Christoffel-Darboux kernels with their connection data.
//!
//! A kernel is K(x,y) = (phi(x) psi(y) - psi(x) phi(y))/(x - y) with the
//! component pair satisfying the first-order system
//! m phi' = A phi + B psi,  m psi' = -C phi - A psi
//! for polynomials (m, A, B, C). Conditioning a kernel on particle loci
//! produces another kernel of the same shape (see `conditioning`), so every
//! evaluation path here works uniformly for base and conditioned kernels.

use crate::error::{Error, Result};
use crate::poly::{Poly, C64};
use crate::specfun::{self, BaseFamily};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Diagonal guard: below this |x - y| the CD ratio switches to the expansion.
pub const DIAG_GUARD: f64 = 1e-5;
/// Below this |x - t_locus| conditioned components switch to the locus expansion.
const LOCUS_GUARD: f64 = 1e-5;

/// Connection polynomials of the first-order system.
#[derive(Debug, Clone)]
pub struct ConnectionPolynomials {
    pub m: Poly,
    pub a: Poly,
    pub b: Poly,
    pub c: Poly,
}

/// Data attached to one conditioned locus: the (regularized) locus t and the
/// gauge constants a = psi(t)/sqrt(rho1(t)), b = phi(t)/sqrt(rho1(t)).
#[derive(Debug, Clone)]
pub struct LocusData {
    pub t: Complex64,
    pub a: Complex64,
    pub b: Complex64,
    /// Taylor coefficients about t of g = a phi - b psi (parent components);
    /// g_jet[0] is the analytically-zero constant term and is not used.
    pub g_jet: Vec<Complex64>,
}

/// Kernel family tag for construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Airy,
    Bessel { nu: f64 },
    Sine,
}

#[derive(Debug, Clone)]
pub enum Kind {
    Airy,
    Bessel { nu: f64 },
    Sine,
    Conditioned { base: Box<KernelSpec>, locus: LocusData },
}

/// A kernel with evaluators, connection polynomials, and a validity window.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub kind: Kind,
    pub connection: ConnectionPolynomials,
    pub validity: (f64, f64),
}

/// Build a base kernel from its family tag.
pub fn make_kernel(family: Family) -> Result<KernelSpec> {
    match family {
        Family::Airy => Ok(KernelSpec {
            kind: Kind::Airy,
            connection: ConnectionPolynomials {
                m: Poly::from_real(&[1.0]),
                a: Poly::zero(),
                b: Poly::from_real(&[1.0]),
                c: Poly::from_real(&[0.0, -1.0]),
            },
            validity: (-40.0, 200.0),
        }),
        Family::Bessel { nu } => {
            if nu <= -1.0 || !nu.is_finite() {
                return Err(Error::Domain(format!("bessel family needs nu > -1, got {nu}")));
            }
            Ok(KernelSpec {
                kind: Kind::Bessel { nu },
                connection: ConnectionPolynomials {
                    m: Poly::from_real(&[0.0, 1.0]),
                    a: Poly::zero(),
                    b: Poly::from_real(&[1.0]),
                    c: Poly::from_real(&[-nu * nu / 4.0, 0.25]),
                },
                validity: (0.0, 1.0e4),
            })
        }
        Family::Sine => Ok(KernelSpec {
            kind: Kind::Sine,
            connection: ConnectionPolynomials {
                m: Poly::from_real(&[1.0]),
                a: Poly::zero(),
                b: Poly::from_real(&[1.0]),
                c: Poly::from_real(&[1.0]),
            },
            validity: (f64::NEG_INFINITY, f64::INFINITY),
        }),
    }
}

impl KernelSpec {
    /// Root base family of a (possibly nested) conditioned kernel.
    pub fn base_family(&self) -> BaseFamily {
        match &self.kind {
            Kind::Airy => BaseFamily::Airy,
            Kind::Bessel { nu } => BaseFamily::Bessel { nu: *nu },
            Kind::Sine => BaseFamily::Sine,
            Kind::Conditioned { base, .. } => base.base_family(),
        }
    }

    /// Loci of all conditioning layers, outermost last.
    pub fn loci(&self) -> Vec<&LocusData> {
        match &self.kind {
            Kind::Conditioned { base, locus } => {
                let mut v = base.loci();
                v.push(locus);
                v
            }
            _ => vec![],
        }
    }

    pub fn is_conditioned(&self) -> bool {
        matches!(self.kind, Kind::Conditioned { .. })
    }

    pub fn family_name(&self) -> String {
        match &self.kind {
            Kind::Airy => "airy".into(),
            Kind::Bessel { nu } => format!("bessel(nu={nu})"),
            Kind::Sine => "sine".into(),
            Kind::Conditioned { base, .. } => format!("conditioned({})", base.family_name()),
        }
    }

    fn check_window(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.validity;
        if x < lo || x > hi || !x.is_finite() {
            return Err(Error::Domain(format!(
                "argument {x} outside validity window [{lo}, {hi}] of {}",
                self.family_name()
            )));
        }
        Ok(())
    }

    /// Component pair (phi, psi) at a real point.
    pub fn components(&self, x: f64) -> (C64, C64) {
        match &self.kind {
            Kind::Airy => {
                let (ai, aip) = specfun::airy_pair(x).expect("airy validity window");
                (C64::new(ai, 0.0), C64::new(aip, 0.0))
            }
            Kind::Bessel { nu } => {
                let r = x.sqrt();
                let (jm, j0, jp) = crate::specfun::bessel_j_triple_unchecked(*nu, r);
                (C64::new(j0, 0.0), C64::new(r / 4.0 * (jm - jp), 0.0))
            }
            Kind::Sine => {
                let s = PI.sqrt().recip();
                (C64::new(s * x.sin(), 0.0), C64::new(s * x.cos(), 0.0))
            }
            Kind::Conditioned { base, locus } => {
                let (phi, psi) = base.components(x);
                apply_gauge(locus, C64::new(x, 0.0), phi, psi)
            }
        }
    }

    /// Component pair at a complex point near the real axis (|Im z| <= 1e-6).
    pub fn components_complex(&self, z: C64) -> Result<(C64, C64)> {
        match &self.kind {
            Kind::Conditioned { base, locus } => {
                let (phi, psi) = base.components_complex(z)?;
                Ok(apply_gauge(locus, z, phi, psi))
            }
            _ => specfun::component_pair_complex(self.base_family(), z.re, C64::new(0.0, z.im)),
        }
    }

    /// Taylor coefficients (value, deriv/1!, deriv2/2!, ...) of (phi, psi) at a
    /// complex center, generated from the connection system. Requires m(z) != 0.
    pub fn component_jet(&self, z: C64, order: usize) -> Result<(Vec<C64>, Vec<C64>)> {
        let m = self.connection.m.shift(z);
        let m0 = m.coeff(0);
        if m0.norm() < 1e-13 {
            return Err(Error::SingularSystem(format!(
                "m({z}) ~ 0; component jet undefined at a singular point"
            )));
        }
        let a = self.connection.a.shift(z);
        let b = self.connection.b.shift(z);
        let c = self.connection.c.shift(z);
        let (phi0, psi0) = if z.im == 0.0 {
            (Ok(self.components(z.re)) as Result<(C64, C64)>)?
        } else {
            self.components_complex(z)?
        };
        let mut phi = vec![C64::default(); order + 1];
        let mut psi = vec![C64::default(); order + 1];
        phi[0] = phi0;
        psi[0] = psi0;
        for k in 0..order {
            let mut rhs_phi = C64::default();
            let mut rhs_psi = C64::default();
            for j in 0..=k {
                rhs_phi += a.coeff(j) * phi[k - j] + b.coeff(j) * psi[k - j];
                rhs_psi += -c.coeff(j) * phi[k - j] - a.coeff(j) * psi[k - j];
            }
            for j in 1..=k {
                let w = m.coeff(j) * ((k - j + 1) as f64);
                rhs_phi -= w * phi[k - j + 1];
                rhs_psi -= w * psi[k - j + 1];
            }
            let denom = m0 * ((k + 1) as f64);
            phi[k + 1] = rhs_phi / denom;
            psi[k + 1] = rhs_psi / denom;
        }
        Ok((phi, psi))
    }

    /// phi' or psi' at x from the connection (never differencing).
    pub fn connection_derivative(&self, which: specfun::Component, x: f64) -> Result<C64> {
        let m = self.connection.m.eval_real(x);
        if m.norm() < 1e-13 {
            return Err(Error::SingularSystem(format!("m({x}) ~ 0")));
        }
        let (phi, psi) = self.components(x);
        let a = self.connection.a.eval_real(x);
        Ok(match which {
            specfun::Component::Phi => (a * phi + self.connection.b.eval_real(x) * psi) / m,
            specfun::Component::Psi => (-self.connection.c.eval_real(x) * phi - a * psi) / m,
        })
    }

    /// Nearest conditioned locus within the locus guard, if any.
    fn near_locus(&self, x: f64) -> Option<&LocusData> {
        self.loci()
            .into_iter()
            .find(|l| (x - l.t.re).abs() < LOCUS_GUARD)
    }

    /// K(x, x): diagonal limit phi' psi - phi psi' with connection derivatives.
    pub fn diag(&self, x: f64) -> C64 {
        if let Some(_l) = self.near_locus(x) {
            let (phi, psi, dphi, dpsi) = self
                .components_with_derivative_near_locus(x)
                .expect("near-locus expansion");
            return dphi * psi - phi * dpsi;
        }
        let (phi, psi) = self.component_jet(C64::new(x, 0.0), 1).expect("diag jet");
        phi[1] * psi[0] - phi[0] * psi[1]
    }

    /// (phi, psi, phi', psi') near a conditioned locus, using the cached
    /// expansion of g = a phi - b psi about t to avoid the 0/0 ratio.
    fn components_with_derivative_near_locus(&self, x: f64) -> Result<(C64, C64, C64, C64)> {
        match &self.kind {
            Kind::Conditioned { base, locus } => {
                let z = C64::new(x, 0.0);
                let (phi, psi) = base.components(x);
                let (bj, pj) = base.component_jet(z, 2)?;
                let (dphi, dpsi) = (bj[1], pj[1]);
                if (x - locus.t.re).abs() < LOCUS_GUARD {
                    let d = z - locus.t;
                    // G = g(x)/(x-t) and G' from the cached jet of g about t
                    let mut g_over = C64::default();
                    let mut g_over_d = C64::default();
                    let mut dk = C64::new(1.0, 0.0);
                    for k in 1..locus.g_jet.len() {
                        g_over += locus.g_jet[k] * dk;
                        if k >= 2 {
                            let dkm = dk / d * ((k - 1) as f64);
                            // guard: if d == 0 exactly, only the k=2 term of G' survives
                            let contrib = if d.norm() == 0.0 {
                                if k == 2 {
                                    locus.g_jet[2]
                                } else {
                                    C64::default()
                                }
                            } else {
                                locus.g_jet[k] * dkm
                            };
                            g_over_d += contrib;
                        }
                        dk *= d;
                    }
                    let tphi = phi - locus.b * g_over;
                    let tpsi = psi - locus.a * g_over;
                    let dtphi = dphi - locus.b * g_over_d;
                    let dtpsi = dpsi - locus.a * g_over_d;
                    Ok((tphi, tpsi, dtphi, dtpsi))
                } else {
                    // this layer is regular here; nesting with close loci is rejected upstream
                    let (tphi, tpsi) = apply_gauge(locus, z, phi, psi);
                    let d = z - locus.t;
                    let g = locus.a * phi - locus.b * psi;
                    let dg = locus.a * dphi - locus.b * dpsi;
                    let ratio_d = (dg * d - g) / (d * d);
                    Ok((tphi, tpsi, dphi - locus.b * ratio_d, dpsi - locus.a * ratio_d))
                }
            }
            _ => {
                let (j, p) = self.component_jet(C64::new(x, 0.0), 1)?;
                Ok((j[0], p[0], j[1], p[1]))
            }
        }
    }

    /// Christoffel-Darboux evaluation with the diagonal expansion below the guard.
    pub fn cd_eval(&self, x: f64, y: f64) -> C64 {
        let cx = self.components(x);
        let cy = self.components(y);
        self.cd_from_components(x, cx, y, cy)
    }

    /// CD ratio from precomputed component pairs (the Nystrom hot path).
    pub fn cd_from_components(&self, x: f64, cx: (C64, C64), y: f64, cy: (C64, C64)) -> C64 {
        let d = x - y;
        if d.abs() > DIAG_GUARD {
            return (cx.0 * cy.1 - cx.1 * cy.0) / d;
        }
        let c = 0.5 * (x + y);
        if self.near_locus(c).is_some() {
            // second-order correction skipped inside the locus guard; the
            // expansion there is already cancellation-free
            let (phi, psi, dphi, dpsi) = self
                .components_with_derivative_near_locus(c)
                .expect("near-locus expansion");
            return dphi * psi - phi * dpsi;
        }
        let (phi, psi) = self.component_jet(C64::new(c, 0.0), 3).expect("diagonal jet");
        let lead = phi[1] * psi[0] - phi[0] * psi[1];
        let corr = phi[3] * psi[0] - phi[0] * psi[3] + phi[1] * psi[2] - phi[2] * psi[1];
        lead + corr * (d * d / 4.0)
    }

    /// One-point density rho1(t) = K(t, t).
    pub fn rho1(&self, t: f64) -> f64 {
        self.diag(t).re
    }

    /// Two-point function rho2(t, s) = rho1(t) rho1(s) - K(t,s)^2.
    pub fn rho2(&self, t: f64, s: f64) -> f64 {
        let k = self.cd_eval(t, s).re;
        self.rho1(t) * self.rho1(s) - k * k
    }

    /// Public window check used by construction paths.
    pub fn require_in_window(&self, x: f64) -> Result<()> {
        self.check_window(x)
    }
}

/// Apply the gauge factor of one locus to a component pair at point z.
pub(crate) fn apply_gauge(locus: &LocusData, z: C64, phi: C64, psi: C64) -> (C64, C64) {
    let d = z - locus.t;
    if z.im == 0.0 && (z.re - locus.t.re).abs() < LOCUS_GUARD {
        // cancellation-free expansion of g/(x-t) about the locus
        let mut g_over = C64::default();
        let mut dk = C64::new(1.0, 0.0);
        for k in 1..locus.g_jet.len() {
            g_over += locus.g_jet[k] * dk;
            dk *= d;
        }
        return (phi - locus.b * g_over, psi - locus.a * g_over);
    }
    let g = (locus.a * phi - locus.b * psi) / d;
    (phi - locus.b * g, psi - locus.a * g)
}
