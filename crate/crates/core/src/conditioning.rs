//! Conditioning a kernel on designated particle loci.
//!
//! Fixing a particle at t maps the component pair through the unimodular
//! gauge factor U(x) with entries 1 -+ ab/(x-t), +-b^2/(x-t), -a^2/(x-t),
//! where a = psi(t)/sqrt(rho1(t)), b = phi(t)/sqrt(rho1(t)). The transformed
//! pair satisfies a first-order system of the same shape with polynomial
//! coefficients again, after absorbing (x-t)^2 into m.

use crate::error::{Error, Result};
use crate::kernel::{ConnectionPolynomials, Kind, KernelSpec, LocusData};
use crate::poly::{Poly, C64};
use num_complex::Complex64;

/// Minimum one-point density at a locus.
const MIN_DENSITY: f64 = 1e-12;
/// Loci whose real parts are closer than this are rejected.
const COINCIDENCE_TOL: f64 = 1e-8;
/// Largest admissible regularization.
const MAX_IM: f64 = 1e-6;
const G_JET_ORDER: usize = 6;

/// General gauge transform of the connection polynomials for constants (a, b)
/// and locus t, including the (x-t)^2 redefinition that restores polynomials.
pub fn transform_connection(conn: &ConnectionPolynomials, a: C64, b: C64, t: C64) -> ConnectionPolynomials {
    let lin = Poly::linear(t); // x - t
    let quad = lin.mul(&lin);
    let e = conn
        .a
        .scale(a * b * 2.0)
        .add(&conn.b.scale(a * a))
        .add(&conn.c.scale(b * b))
        .sub(&conn.m);
    let new_a = quad
        .mul(&conn.a)
        .add(&lin.mul(&conn.b.scale(a * a).sub(&conn.c.scale(b * b))))
        .sub(&e.scale(a * b));
    let new_b = quad
        .mul(&conn.b)
        .sub(&lin.mul(&conn.a.scale(b).add(&conn.b.scale(a)).scale(C64::new(2.0, 0.0) * b)))
        .add(&e.scale(b * b));
    let new_c = quad
        .mul(&conn.c)
        .add(&lin.mul(&conn.a.scale(a).add(&conn.c.scale(b)).scale(C64::new(2.0, 0.0) * a)))
        .add(&e.scale(a * a));
    ConnectionPolynomials {
        m: quad.mul(&conn.m),
        a: new_a,
        b: new_b,
        c: new_c,
    }
}

/// rho1 at a complex point via the connection derivatives of the given kernel.
fn rho1_complex(k: &KernelSpec, t: C64) -> Result<C64> {
    let (phi, psi) = k.component_jet(t, 1)?;
    Ok(phi[1] * psi[0] - psi[1] * phi[0])
}

/// Condition a kernel on one locus t (complex; Im t is the regularization).
pub fn condition(k: &KernelSpec, t: Complex64) -> Result<KernelSpec> {
    if t.im.abs() > MAX_IM {
        return Err(Error::Domain(format!("|Im t| = {} exceeds {MAX_IM}", t.im.abs())));
    }
    k.require_in_window(t.re)
        .map_err(|_| Error::LocusOutsideValidity { t: t.re })?;
    for l in k.loci() {
        if (l.t.re - t.re).abs() < COINCIDENCE_TOL {
            return Err(Error::CoincidentLoci);
        }
    }
    let rho_real = k.rho1(t.re);
    if rho_real < MIN_DENSITY {
        return Err(Error::ZeroDensity { t: t.re });
    }
    let rho_t = rho1_complex(k, t)?;
    let sqrt_rho = rho_t.sqrt(); // principal branch; rho1(Re t) > 0 and Im t tiny
    let (phi_t, psi_t) = k.components_complex(t)?;
    let a = psi_t / sqrt_rho;
    let b = phi_t / sqrt_rho;
    // Taylor coefficients of g = a phi - b psi about t; g(t) = 0 analytically
    let (pj, sj) = k.component_jet(t, G_JET_ORDER)?;
    let g_jet: Vec<C64> = pj.iter().zip(sj.iter()).map(|(&p, &s)| a * p - b * s).collect();
    let locus = LocusData { t, a, b, g_jet };
    let connection = transform_connection(&k.connection, a, b, t);
    Ok(KernelSpec {
        kind: Kind::Conditioned {
            base: Box::new(k.clone()),
            locus,
        },
        connection,
        validity: k.validity,
    })
}

/// Condition on several loci by iterating the one-locus map.
pub fn condition_many(k: &KernelSpec, loci: &[Complex64]) -> Result<KernelSpec> {
    for (i, a) in loci.iter().enumerate() {
        for b in loci.iter().skip(i + 1) {
            if (a.re - b.re).abs() < COINCIDENCE_TOL {
                return Err(Error::CoincidentLoci);
            }
        }
    }
    let mut out = k.clone();
    for &t in loci {
        out = condition(&out, t)?;
    }
    Ok(out)
}

/// The unimodular gauge factor U(x) of one locus, row-major 2x2.
pub fn gauge_matrix(locus: &LocusData, x: f64) -> Result<[[C64; 2]; 2]> {
    let d = C64::new(x, 0.0) - locus.t;
    if d.norm() == 0.0 {
        return Err(Error::PoleAtLocus);
    }
    let ab = locus.a * locus.b;
    Ok([
        [C64::new(1.0, 0.0) - ab / d, locus.b * locus.b / d],
        [-locus.a * locus.a / d, C64::new(1.0, 0.0) + ab / d],
    ])
}

/// Conditioned sine kernel at t = 0 versus the closed form
/// (1/pi)(sin(x-y)/(x-y) - (sin x / x)(sin y / y)); returns both values.
pub fn sine_k1_check(x: f64, y: f64) -> Result<(C64, C64)> {
    let sine = crate::kernel::make_kernel(crate::kernel::Family::Sine)?;
    let conditioned = condition(&sine, Complex64::new(0.0, 0.0))?;
    let ours = conditioned.cd_eval(x, y);
    let closed = if (x - y).abs() < 1e-12 {
        (1.0 - (x.sin() / x) * (y.sin() / y)) / std::f64::consts::PI
    } else {
        (((x - y).sin() / (x - y)) - (x.sin() / x) * (y.sin() / y)) / std::f64::consts::PI
    };
    Ok((ours, C64::new(closed, 0.0)))
}

/// Direct block-formula evaluation K(x,y) - k^t kappa^-1 k of the conditioned
/// kernel; the independent oracle for the iterated gauge construction.
pub fn block_conditioned_eval(base: &KernelSpec, loci: &[Complex64], x: f64, y: f64) -> Result<C64> {
    use nalgebra::DMatrix;
    let k = loci.len();
    let cd = |z1: C64, z2: C64| -> Result<C64> {
        if (z1 - z2).norm() < 1e-12 {
            let (phi, psi) = base.component_jet(z1, 1)?;
            return Ok(phi[1] * psi[0] - phi[0] * psi[1]);
        }
        let (p1, s1) = base.components_complex(z1)?;
        let (p2, s2) = base.components_complex(z2)?;
        Ok((p1 * s2 - s1 * p2) / (z1 - z2))
    };
    let zx = C64::new(x, 0.0);
    let zy = C64::new(y, 0.0);
    let mut kappa = DMatrix::<C64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            kappa[(i, j)] = cd(loci[i], loci[j])?;
        }
    }
    let kx = DMatrix::<C64>::from_fn(k, 1, |i, _| cd(loci[i], zx).unwrap());
    let ky = DMatrix::<C64>::from_fn(k, 1, |i, _| cd(loci[i], zy).unwrap());
    let inv = kappa
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("kappa singular".into()))?;
    let corr = (kx.transpose() * inv * ky)[(0, 0)];
    Ok(cd(zx, zy)? - corr)
}
