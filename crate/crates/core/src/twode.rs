//! Tracy-Widom ODE systems in the moving interval endpoint for conditioned
//! Airy-type and Bessel-type kernels.
//!
//! The endpoint functions q0 = phi-hat(s), p0 = psi-hat(s) (resolvent-applied
//! components) close into a finite ODE system together with the moment
//! integrals u_k, v_k, w_k and the algebraic combinations q1..q3, p1, p2,
//! vtilde0..2. The diagonal resolvent R(s) = p0 q0' - q0 p0' integrates to the
//! log Fredholm determinant of the conditioned kernel.

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, Kind};
use crate::odeengine::{integrate, OdeProblem, Trajectory};
use crate::specfun::gauss_legendre;
use num_complex::Complex64;

type C64 = Complex64;

const STATE_DIM: usize = 11; // q0 p0 u0 u1 u2 v0 v1 v2 w0 w1 intR
pub const DEFAULT_RTOL: f64 = 1e-13;
pub const DEFAULT_ATOL: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwFamily {
    AiryType,
    BesselType { nu: f64 },
}

/// Coefficient data of the endpoint ODE system for one conditioned locus.
#[derive(Debug, Clone)]
pub struct TwSystemSpec {
    pub family: TwFamily,
    /// Coefficients of the transformed A (degree <= 2).
    pub alpha: Vec<C64>,
    /// Coefficients of the transformed B (degree <= 2).
    pub beta: Vec<C64>,
    /// Coefficients of the transformed C (degree <= 3).
    pub gamma: Vec<C64>,
    pub t: C64,
    /// The conditioned kernel, used for boundary values.
    pub kernel: KernelSpec,
}

/// The integration state at one endpoint value.
#[derive(Debug, Clone)]
pub struct TwState {
    pub q0: C64,
    pub p0: C64,
    pub u: [C64; 3],
    pub v: [C64; 3],
    pub w: [C64; 2],
    pub logdet: C64,
}

impl TwState {
    fn to_vec(&self) -> Vec<C64> {
        vec![
            self.q0, self.p0, self.u[0], self.u[1], self.u[2], self.v[0], self.v[1], self.v[2],
            self.w[0], self.w[1], self.logdet,
        ]
    }

    fn from_slice(y: &[C64]) -> TwState {
        TwState {
            q0: y[0],
            p0: y[1],
            u: [y[2], y[3], y[4]],
            v: [y[5], y[6], y[7]],
            w: [y[8], y[9]],
            logdet: y[10],
        }
    }
}

/// Algebraically determined quantities derived from the state at endpoint s.
#[derive(Debug, Clone)]
pub struct TwClosure {
    pub q: [C64; 4],
    pub p: [C64; 3],
    pub vt: [C64; 3],
}

/// Build the endpoint system from a singly-conditioned kernel.
pub fn build_system(ck: &KernelSpec) -> Result<TwSystemSpec> {
    let (base, locus) = match &ck.kind {
        Kind::Conditioned { base, locus } => (base.as_ref(), locus),
        _ => {
            return Err(Error::UnsupportedFamily(
                "endpoint system needs a conditioned kernel".into(),
            ))
        }
    };
    let family = match &base.kind {
        Kind::Airy => TwFamily::AiryType,
        Kind::Bessel { nu } => TwFamily::BesselType { nu: *nu },
        _ => {
            return Err(Error::UnsupportedFamily(format!(
                "endpoint system supports airy/bessel bases, got {}",
                base.family_name()
            )))
        }
    };
    let take = |p: &crate::poly::Poly, maxdeg: usize, name: &str| -> Result<Vec<C64>> {
        if p.degree() > maxdeg && !p.coeffs.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{name} degree {} exceeds {maxdeg}",
                p.degree()
            )));
        }
        let mut v = vec![C64::default(); maxdeg + 1];
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = p.coeff(j);
        }
        Ok(v)
    };
    Ok(TwSystemSpec {
        family,
        alpha: take(&ck.connection.a, 2, "transformed A")?,
        beta: take(&ck.connection.b, 2, "transformed B")?,
        gamma: take(&ck.connection.c, 3, "transformed C")?,
        t: locus.t,
        kernel: ck.clone(),
    })
}

fn coef(v: &[C64], idx: usize) -> C64 {
    v.get(idx).copied().unwrap_or_default()
}

/// The algebraic block: q1..q3, p1, p2, vtilde0..2 in dependency order.
pub fn algebraic_closure(_sys: &TwSystemSpec, s: f64, st: &TwState) -> TwClosure {
    let sc = C64::new(s, 0.0);
    let (q0, p0) = (st.q0, st.p0);
    let (u0, u1, u2) = (st.u[0], st.u[1], st.u[2]);
    let (v0, v1, v2) = (st.v[0], st.v[1], st.v[2]);
    let (w0, w1) = (st.w[0], st.w[1]);
    let vt0 = v0;
    let q1 = sc * q0 - v0 * q0 + u0 * p0;
    let p1 = sc * p0 - w0 * q0 + vt0 * p0;
    let vt1 = v1 - v0 * vt0 + u0 * w0;
    let q2 = sc * sc * q0 - v0 * q1 - v1 * q0 + u0 * p1 + u1 * p0;
    let p2 = sc * sc * p0 - w0 * q1 - w1 * q0 + vt0 * p1 + vt1 * p0;
    let vt2 = v2 - v0 * vt1 - v1 * vt0 + u0 * w1 + u1 * w0;
    let q3 = sc * sc * sc * q0 - v0 * q2 - v1 * q1 - v2 * q0 + u0 * p2 + u1 * p1 + u2 * p0;
    TwClosure {
        q: [q0, q1, q2, q3],
        p: [p0, p1, p2],
        vt: [vt0, vt1, vt2],
    }
}

/// Full right-hand side of the endpoint system; dy mirrors the state layout.
pub fn rhs(sys: &TwSystemSpec, s: f64, y: &[C64], dy: &mut [C64]) {
    let st = TwState::from_slice(y);
    let cl = algebraic_closure(sys, s, &st);
    let (alpha, beta, gamma) = (&sys.alpha, &sys.beta, &sys.gamma);
    let t = sys.t;
    let sc = C64::new(s, 0.0);

    let mut num_q = C64::default();
    for j in 0..=2 {
        let mut bracket = coef(alpha, j);
        for k in 0..=1 {
            bracket += coef(alpha, j + k + 1) * st.v[k];
        }
        for k in 0..=2 {
            bracket += coef(gamma, j + k + 1) * st.u[k];
        }
        num_q += bracket * cl.q[j];
    }
    for j in 0..=2 {
        let mut bracket = coef(beta, j);
        for k in 0..=1 {
            bracket += coef(alpha, j + k + 1) * st.u[k];
        }
        for k in 0..=1 {
            bracket += coef(beta, j + k + 1) * st.v[k];
        }
        num_q += bracket * cl.p[j];
    }
    let mut num_p = C64::default();
    for j in 0..=3 {
        let mut bracket = -coef(gamma, j);
        for k in 0..=1 {
            bracket += coef(alpha, j + k + 1) * st.w[k];
        }
        for k in 0..=2 {
            bracket += coef(gamma, j + k + 1) * cl.vt[k];
        }
        num_p += bracket * cl.q[j];
    }
    for j in 0..=2 {
        let mut bracket = -coef(alpha, j);
        for k in 0..=1 {
            bracket += coef(alpha, j + k + 1) * cl.vt[k];
        }
        for k in 0..=1 {
            bracket += coef(beta, j + k + 1) * st.w[k];
        }
        num_p += bracket * cl.p[j];
    }

    let dsq = (sc - t) * (sc - t);
    let (denom, sign) = match sys.family {
        TwFamily::AiryType => {
            num_q += -st.v[0] * cl.q[0] + st.u[0] * cl.p[0];
            num_p += -st.w[0] * cl.q[0] + cl.vt[0] * cl.p[0];
            (dsq, -1.0)
        }
        TwFamily::BesselType { .. } => {
            let two_t = t * 2.0;
            num_q += two_t * st.v[0] * cl.q[0] - 2.0 * st.v[1] * cl.q[0] - st.v[0] * cl.q[1];
            num_q += -two_t * st.u[0] * cl.p[0] + 2.0 * st.u[1] * cl.p[0] + st.u[0] * cl.p[1];
            num_p += two_t * st.w[0] * cl.q[0] - 2.0 * st.w[1] * cl.q[0] - st.w[0] * cl.q[1];
            num_p += -two_t * cl.vt[0] * cl.p[0] + 2.0 * cl.vt[1] * cl.p[0] + cl.vt[0] * cl.p[1];
            (sc * dsq, 1.0)
        }
    };
    let dq0 = num_q / denom;
    let dp0 = num_p / denom;
    dy[0] = dq0;
    dy[1] = dp0;
    dy[2] = sign * cl.q[0] * cl.q[0];
    dy[3] = sign * cl.q[0] * cl.q[1];
    dy[4] = sign * cl.q[0] * cl.q[2];
    dy[5] = sign * cl.q[0] * cl.p[0];
    dy[6] = sign * cl.q[0] * cl.p[1];
    dy[7] = sign * cl.q[0] * cl.p[2];
    dy[8] = sign * cl.p[0] * cl.p[0];
    dy[9] = sign * cl.p[0] * cl.p[1];
    // d(intR)/ds: R = p0 q0' - q0 p0'
    dy[10] = cl.p[0] * dq0 - cl.q[0] * dp0;
}

/// Moment integrals over the decaying tail (x = cutoff + u^2 substitution),
/// panels doubled until the increment is below 1e-16 relative.
fn airy_tail_moments(k: &KernelSpec, cutoff: f64) -> Result<[C64; 8]> {
    // integrand decay exp(-(4/3) x^(3/2)); the substituted range [0, U]
    let u_max = ((800.0f64).powf(2.0 / 3.0) - cutoff).max(1.0).sqrt();
    let eval = |panels: usize| -> Result<[C64; 8]> {
        let mut acc = [C64::default(); 8];
        for p in 0..panels {
            let a = u_max * p as f64 / panels as f64;
            let b = u_max * (p + 1) as f64 / panels as f64;
            let rule = gauss_legendre(40, a, b)?;
            for (&u, &wt) in rule.nodes.iter().zip(rule.weights.iter()) {
                let x = cutoff + u * u;
                let (phi, psi) = k.components(x);
                let jac = 2.0 * u * wt;
                let mut xk = C64::new(1.0, 0.0);
                for m in 0..3 {
                    acc[m] += phi * phi * xk * jac;
                    acc[3 + m] += phi * psi * xk * jac;
                    if m < 2 {
                        acc[6 + m] += psi * psi * xk * jac;
                    }
                    xk *= C64::new(x, 0.0);
                }
            }
        }
        Ok(acc)
    };
    let mut panels = 4;
    let mut prev = eval(panels)?;
    for _ in 0..5 {
        panels *= 2;
        let next = eval(panels)?;
        let diff: f64 = prev
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let scale: f64 = next.iter().map(|v| v.norm()).fold(1e-30, f64::max);
        prev = next;
        if diff <= 1e-16 * scale.max(1e-12) {
            return Ok(prev);
        }
    }
    Ok(prev)
}

/// Boundary state at the starting cutoff (large positive for airy-type,
/// small positive for bessel-type).
pub fn boundary_state(sys: &TwSystemSpec, cutoff: f64) -> Result<TwState> {
    match sys.family {
        TwFamily::AiryType => {
            if cutoff < 8.0 {
                return Err(Error::InvalidArgument(format!(
                    "airy-type boundary cutoff {cutoff} < 8"
                )));
            }
            let (q0, p0) = sys.kernel.components(cutoff);
            let m = airy_tail_moments(&sys.kernel, cutoff)?;
            Ok(TwState {
                q0,
                p0,
                u: [m[0], m[1], m[2]],
                v: [m[3], m[4], m[5]],
                w: [m[6], m[7]],
                logdet: C64::default(),
            })
        }
        TwFamily::BesselType { .. } => {
            if !(cutoff > 0.0 && cutoff <= 1e-8) {
                return Err(Error::InvalidArgument(format!(
                    "bessel-type boundary cutoff {cutoff} outside (0, 1e-8]"
                )));
            }
            let (q0, p0) = sys.kernel.components(cutoff);
            let rule = gauss_legendre(16, 0.0, cutoff)?;
            let mut m = [C64::default(); 8];
            for (&x, &wt) in rule.nodes.iter().zip(rule.weights.iter()) {
                let (phi, psi) = sys.kernel.components(x);
                let mut xk = C64::new(1.0, 0.0);
                for j in 0..3 {
                    m[j] += phi * phi * xk * wt;
                    m[3 + j] += phi * psi * xk * wt;
                    if j < 2 {
                        m[6 + j] += psi * psi * xk * wt;
                    }
                    xk *= C64::new(x, 0.0);
                }
            }
            Ok(TwState {
                q0,
                p0,
                u: [m[0], m[1], m[2]],
                v: [m[3], m[4], m[5]],
                w: [m[6], m[7]],
                logdet: C64::default(),
            })
        }
    }
}

/// Solved endpoint data at one target.
#[derive(Debug, Clone, Copy)]
pub struct TwPoint {
    pub s: f64,
    /// Diagonal resolvent R(s).
    pub r: f64,
    /// log Det(I - Ktilde) on (s, cutoff) for airy-type, (cutoff, s) for bessel-type.
    pub logdet: f64,
    pub q0: f64,
    pub p0: f64,
    /// Largest imaginary part seen among the reported quantities.
    pub imag_residual: f64,
}

/// Half-width of the window vaulted over the conditioned locus by a Taylor
/// step. Inside |s - Re t| < VAULT_HALF the raw right-hand side loses the
/// (s-t)^2 cancellation to roundoff; the solution itself stays analytic, so a
/// series step from the window edge carries it across.
const VAULT_HALF: f64 = 0.02;
/// Truncation order of the vault series: noise grows like 4^k per order while
/// the series tail falls like (2 VAULT_HALF / radius)^k, crossing near k ~ 14.
const VAULT_ORDER: usize = 10;

/// Truncated complex power series support for the vault step.
#[derive(Debug, Clone)]
struct Series {
    c: Vec<C64>,
}

impl Series {
    fn zero(n: usize) -> Series {
        Series { c: vec![C64::default(); n] }
    }
    fn constant(v: C64, n: usize) -> Series {
        let mut s = Series::zero(n);
        s.c[0] = v;
        s
    }
    fn mul(&self, other: &Series) -> Series {
        let n = self.c.len();
        let mut out = Series::zero(n);
        for i in 0..n {
            if self.c[i] == C64::default() {
                continue;
            }
            for j in 0..n - i {
                out.c[i + j] += self.c[i] * other.c[j];
            }
        }
        out
    }
    fn add(&self, other: &Series) -> Series {
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(other.c.iter()) {
            *a += *b;
        }
        out
    }
    fn sub(&self, other: &Series) -> Series {
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(other.c.iter()) {
            *a -= *b;
        }
        out
    }
    fn scale(&self, v: C64) -> Series {
        Series { c: self.c.iter().map(|&x| x * v).collect() }
    }
    fn eval(&self, sigma: C64) -> C64 {
        let mut acc = C64::default();
        for &ck in self.c.iter().rev() {
            acc = acc * sigma + ck;
        }
        acc
    }
    /// Derivative series (one order shorter, zero-padded).
    fn derivative(&self) -> Series {
        let n = self.c.len();
        let mut out = Series::zero(n);
        for k in 1..n {
            out.c[k - 1] = self.c[k] * k as f64;
        }
        out
    }
}

/// Taylor expansion of the full endpoint state about a center near the locus.
#[derive(Debug, Clone)]
pub struct VaultSeries {
    center: f64,
    /// Series for q0, p0, u0..2, v0..2, w0, w1, intR in state order.
    comp: Vec<Series>,
}

impl VaultSeries {
    fn state_at(&self, s: f64) -> Vec<C64> {
        let sigma = C64::new(s - self.center, 0.0);
        self.comp.iter().map(|ser| ser.eval(sigma)).collect()
    }

    fn derivative_at(&self, s: f64, idx: usize) -> C64 {
        let sigma = C64::new(s - self.center, 0.0);
        self.comp[idx].derivative().eval(sigma)
    }
}

/// Build the vault series at `center` from the state there, using the series
/// form of the endpoint system. The recurrence matches coefficients of
/// denom(s) * (q0', p0') = numerator(s, state) order by order, which keeps the
/// apparent double zero exact instead of evaluating the 0/0 ratio.
fn build_vault_series(sys: &TwSystemSpec, center: f64, y: &[C64]) -> VaultSeries {
    let n = VAULT_ORDER + 1;
    let mut comp: Vec<Series> = y
        .iter()
        .map(|&v| Series::constant(v, n))
        .collect();
    let delta0 = C64::new(center, 0.0) - sys.t; // s0 - t
    // s as a series about the center
    let mut s_series = Series::constant(C64::new(center, 0.0), n);
    s_series.c[1] = C64::new(1.0, 0.0);
    // denominator coefficients: airy (sigma+d0)^2; bessel (sigma+s0)(sigma+d0)^2
    let denom: Vec<C64> = match sys.family {
        TwFamily::AiryType => vec![delta0 * delta0, 2.0 * delta0, C64::new(1.0, 0.0)],
        TwFamily::BesselType { .. } => {
            let s0 = C64::new(center, 0.0);
            vec![
                s0 * delta0 * delta0,
                delta0 * delta0 + 2.0 * s0 * delta0,
                s0 + 2.0 * delta0,
                C64::new(1.0, 0.0),
            ]
        }
    };
    let sign = match sys.family {
        TwFamily::AiryType => -1.0,
        TwFamily::BesselType { .. } => 1.0,
    };
    for m in 0..VAULT_ORDER {
        // closure series through the current order
        let q0 = comp[0].clone();
        let p0 = comp[1].clone();
        let u = [comp[2].clone(), comp[3].clone(), comp[4].clone()];
        let v = [comp[5].clone(), comp[6].clone(), comp[7].clone()];
        let w = [comp[8].clone(), comp[9].clone()];
        let vt0 = v[0].clone();
        let q1 = s_series.mul(&q0).sub(&v[0].mul(&q0)).add(&u[0].mul(&p0));
        let p1 = s_series.mul(&p0).sub(&w[0].mul(&q0)).add(&vt0.mul(&p0));
        let vt1 = v[1].sub(&v[0].mul(&vt0)).add(&u[0].mul(&w[0]));
        let s2 = s_series.mul(&s_series);
        let q2 = s2
            .mul(&q0)
            .sub(&v[0].mul(&q1))
            .sub(&v[1].mul(&q0))
            .add(&u[0].mul(&p1))
            .add(&u[1].mul(&p0));
        let p2 = s2
            .mul(&p0)
            .sub(&w[0].mul(&q1))
            .sub(&w[1].mul(&q0))
            .add(&vt0.mul(&p1))
            .add(&vt1.mul(&p0));
        let vt2 = v[2]
            .sub(&v[0].mul(&vt1))
            .sub(&v[1].mul(&vt0))
            .add(&u[0].mul(&w[1]))
            .add(&u[1].mul(&w[0]));
        let q3 = s2
            .mul(&s_series)
            .mul(&q0)
            .sub(&v[0].mul(&q2))
            .sub(&v[1].mul(&q1))
            .sub(&v[2].mul(&q0))
            .add(&u[0].mul(&p2))
            .add(&u[1].mul(&p1))
            .add(&u[2].mul(&p0));
        let qs = [q0.clone(), q1.clone(), q2.clone(), q3];
        let ps = [p0.clone(), p1.clone(), p2];
        let vts = [vt0, vt1, vt2];
        // numerators
        let mut num_q = Series::zero(n);
        for j in 0..=2 {
            let mut bracket = Series::constant(coef(&sys.alpha, j), n);
            for k in 0..=1 {
                bracket = bracket.add(&v[k].scale(coef(&sys.alpha, j + k + 1)));
            }
            for k in 0..=2 {
                bracket = bracket.add(&u[k].scale(coef(&sys.gamma, j + k + 1)));
            }
            num_q = num_q.add(&bracket.mul(&qs[j]));
        }
        for j in 0..=2 {
            let mut bracket = Series::constant(coef(&sys.beta, j), n);
            for k in 0..=1 {
                bracket = bracket.add(&u[k].scale(coef(&sys.alpha, j + k + 1)));
            }
            for k in 0..=1 {
                bracket = bracket.add(&v[k].scale(coef(&sys.beta, j + k + 1)));
            }
            num_q = num_q.add(&bracket.mul(&ps[j]));
        }
        let mut num_p = Series::zero(n);
        for j in 0..=3 {
            let mut bracket = Series::constant(-coef(&sys.gamma, j), n);
            for k in 0..=1 {
                bracket = bracket.add(&w[k].scale(coef(&sys.alpha, j + k + 1)));
            }
            for k in 0..=2 {
                bracket = bracket.add(&vts[k].scale(coef(&sys.gamma, j + k + 1)));
            }
            num_p = num_p.add(&bracket.mul(&qs[j]));
        }
        for j in 0..=2 {
            let mut bracket = Series::constant(-coef(&sys.alpha, j), n);
            for k in 0..=1 {
                bracket = bracket.add(&vts[k].scale(coef(&sys.alpha, j + k + 1)));
            }
            for k in 0..=1 {
                bracket = bracket.add(&w[k].scale(coef(&sys.beta, j + k + 1)));
            }
            num_p = num_p.add(&bracket.mul(&ps[j]));
        }
        match sys.family {
            TwFamily::AiryType => {
                num_q = num_q.sub(&v[0].mul(&qs[0])).add(&u[0].mul(&ps[0]));
                num_p = num_p.sub(&w[0].mul(&qs[0])).add(&vts[0].mul(&ps[0]));
            }
            TwFamily::BesselType { .. } => {
                let two_t = sys.t * 2.0;
                num_q = num_q
                    .add(&v[0].mul(&qs[0]).scale(two_t))
                    .sub(&v[1].mul(&qs[0]).scale(C64::new(2.0, 0.0)))
                    .sub(&v[0].mul(&qs[1]))
                    .sub(&u[0].mul(&ps[0]).scale(two_t))
                    .add(&u[1].mul(&ps[0]).scale(C64::new(2.0, 0.0)))
                    .add(&u[0].mul(&ps[1]));
                num_p = num_p
                    .add(&w[0].mul(&qs[0]).scale(two_t))
                    .sub(&w[1].mul(&qs[0]).scale(C64::new(2.0, 0.0)))
                    .sub(&w[0].mul(&qs[1]))
                    .sub(&vts[0].mul(&ps[0]).scale(two_t))
                    .add(&vts[1].mul(&ps[0]).scale(C64::new(2.0, 0.0)))
                    .add(&vts[0].mul(&ps[1]));
            }
        }
        // next coefficient of q0 and p0 from sum_j denom_j (m-j+1) a_{m-j+1} = num_m
        let next_coeff = |a: &Series, num: &Series| -> C64 {
            let mut rhs = num.c[m];
            for (j, &dj) in denom.iter().enumerate().skip(1) {
                if j > m + 1 {
                    break;
                }
                let idx = m + 1 - j; // coefficient a_{m-j+1}
                rhs -= dj * a.c[idx] * (idx as f64);
            }
            rhs / (denom[0] * (m + 1) as f64)
        };
        let a_next = next_coeff(&comp[0], &num_q);
        let b_next = next_coeff(&comp[1], &num_p);
        comp[0].c[m + 1] = a_next;
        comp[1].c[m + 1] = b_next;
        // universal block: y' = sign * (closure products)
        let qp_pairs: [(usize, &Series, &Series); 8] = [
            (2, &qs[0], &qs[0]),
            (3, &qs[0], &qs[1]),
            (4, &qs[0], &qs[2]),
            (5, &qs[0], &ps[0]),
            (6, &qs[0], &ps[1]),
            (7, &qs[0], &ps[2]),
            (8, &ps[0], &ps[0]),
            (9, &ps[0], &ps[1]),
        ];
        for (idx, a, b) in qp_pairs {
            let prod = a.mul(b);
            comp[idx].c[m + 1] = prod.c[m] * sign / (m + 1) as f64;
        }
        // intR' = p0 q0' - q0 p0'; q0' coefficient m is (m+1) a_{m+1}
        let dq0 = comp[0].derivative();
        let dp0 = comp[1].derivative();
        let r_series = comp[1].mul(&dq0).sub(&comp[0].mul(&dp0));
        comp[10].c[m + 1] = r_series.c[m] / (m + 1) as f64;
    }
    VaultSeries { center, comp }
}
/// Airy-type integrations hand off from the analytic free solution here; above
/// this point the kernel mass (and hence the resolvent correction) is below
/// 1e-10, while the components are large enough for relative error control.
const AIRY_HANDOFF: f64 = 6.0;

/// Endpoint trajectory with dense access to (R, logdet, q0, p0).
pub struct TwSolution {
    sys: TwSystemSpec,
    traj: Trajectory,
    pub cutoff: f64,
    /// Airy-type only: the trajectory starts here; on (handoff, cutoff] the
    /// free-solution values are used directly.
    handoff: f64,
    /// Series carrying the state across the locus window, when it was crossed.
    vault: Option<VaultSeries>,
}

impl TwSolution {
    pub fn eval(&self, s: f64) -> Result<TwPoint> {
        let downward = matches!(self.sys.family, TwFamily::AiryType);
        if downward && s > self.handoff {
            if s > self.cutoff {
                return Err(Error::OutOfRange { s });
            }
            return Ok(self.free_point(s));
        }
        let in_vault = self
            .vault
            .as_ref()
            .map(|v| (s - self.sys.t.re).abs() <= VAULT_HALF && (s - v.center).abs() <= 2.0 * VAULT_HALF + 1e-12)
            .unwrap_or(false);
        let (y, dq0, dp0) = if in_vault {
            let v = self.vault.as_ref().unwrap();
            let y = v.state_at(s);
            let dq0 = v.derivative_at(s, 0);
            let dp0 = v.derivative_at(s, 1);
            (y, dq0, dp0)
        } else {
            let y = self.traj.eval_dense(s)?;
            let mut dy = vec![C64::default(); STATE_DIM];
            rhs(&self.sys, s, &y, &mut dy);
            (y, dy[0], dy[1])
        };
        let r = y[1] * dq0 - y[0] * dp0;
        let logdet = match self.sys.family {
            TwFamily::AiryType => y[10],
            TwFamily::BesselType { .. } => -y[10],
        };
        let imag = r
            .im
            .abs()
            .max(logdet.im.abs())
            .max(y[0].im.abs())
            .max(y[1].im.abs());
        Ok(TwPoint {
            s,
            r: r.re,
            logdet: logdet.re,
            q0: y[0].re,
            p0: y[1].re,
            imag_residual: imag,
        })
    }

    /// Free-solution values on the analytic prefix (airy-type tail).
    fn free_point(&self, s: f64) -> TwPoint {
        let k = &self.sys.kernel;
        let (phi, psi) = k.components(s);
        let r = k.diag(s);
        let logdet = -tail_trace(k, s, self.cutoff);
        TwPoint {
            s,
            r: r.re,
            logdet,
            q0: phi.re,
            p0: psi.re,
            imag_residual: phi.im.abs().max(psi.im.abs()).max(r.im.abs()),
        }
    }

    pub fn range(&self) -> (f64, f64) {
        let (a, b) = (self.traj.start(), self.traj.end());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if matches!(self.sys.family, TwFamily::AiryType) {
            (lo, self.cutoff)
        } else {
            (lo, hi)
        }
    }
}

/// Integral of the kernel diagonal over (a, b); in the free tail this is the
/// log-determinant up to O(trace^2).
fn tail_trace(k: &KernelSpec, a: f64, b: f64) -> f64 {
    if (b - a).abs() < 1e-14 {
        return 0.0;
    }
    let rule = gauss_legendre(64, a, b).expect("tail trace rule");
    rule.nodes
        .iter()
        .zip(rule.weights.iter())
        .map(|(&x, &w)| w * k.diag(x).re)
        .sum()
}

/// Integrate the endpoint system from the cutoff far enough to cover `s_far`.
pub fn integrate_system(sys: &TwSystemSpec, cutoff: f64, s_far: f64) -> Result<TwSolution> {
    integrate_system_tol(sys, cutoff, s_far, DEFAULT_RTOL, DEFAULT_ATOL)
}

pub fn integrate_system_tol(
    sys: &TwSystemSpec,
    cutoff: f64,
    s_far: f64,
    rtol: f64,
    atol: f64,
) -> Result<TwSolution> {
    let downward = matches!(sys.family, TwFamily::AiryType);
    if downward && s_far >= cutoff {
        return Err(Error::InvalidArgument(format!(
            "airy-type targets must lie below the cutoff {cutoff}"
        )));
    }
    if !downward && s_far <= cutoff {
        return Err(Error::InvalidArgument(format!(
            "bessel-type targets must lie above the cutoff {cutoff}"
        )));
    }
    let t0 = sys.t.re;
    let dir = if downward { -1.0 } else { 1.0 };
    let span = (s_far - cutoff).abs();
    // overshoot so every target is interior to the dense range
    let mut s_end = s_far + dir * 1e-3 * span.max(0.1);
    let crosses = (s_end - t0) * dir >= -2.0 * VAULT_HALF;
    if crosses && sys.t.im == 0.0 {
        return Err(Error::PoleAtLocus);
    }
    if crosses && !downward && t0 - VAULT_HALF <= cutoff {
        return Err(Error::InvalidArgument(format!(
            "locus {t0} sits within the vault width of the boundary cutoff {cutoff}"
        )));
    }
    if crosses {
        // make sure the post-vault leg has room
        s_end = if downward {
            s_end.min(t0 - 2.0 * VAULT_HALF)
        } else {
            s_end.max(t0 + 2.0 * VAULT_HALF)
        };
    } else if downward {
        s_end = s_end.max(t0 + 2.0 * VAULT_HALF).min(s_far);
    } else {
        s_end = s_end.min(t0 - 2.0 * VAULT_HALF).max(s_far);
    }
    // airy-type: analytic prefix down to the handoff point
    let (start, logdet0) = if downward {
        let start = cutoff.min(AIRY_HANDOFF.max(t0 + 1.0));
        let logdet0 = -tail_trace(&sys.kernel, start, cutoff);
        (start, logdet0)
    } else {
        (cutoff, 0.0)
    };
    let mut y0 = boundary_state(sys, cutoff)?.to_vec();
    if downward && start < cutoff {
        // free-solution state at the handoff point
        let (phi, psi) = sys.kernel.components(start);
        let m = airy_tail_moments(&sys.kernel, start)?;
        y0 = TwState {
            q0: phi,
            p0: psi,
            u: [m[0], m[1], m[2]],
            v: [m[3], m[4], m[5]],
            w: [m[6], m[7]],
            logdet: C64::new(logdet0, 0.0),
        }
        .to_vec();
    }
    if (s_end - start) * dir <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "integration span ({start}, {s_end}) is empty"
        )));
    }
    let adaptive = |a: f64, b: f64, y: Vec<C64>| -> Result<Trajectory> {
        let problem = OdeProblem::new(|s, yy, dy| rhs(sys, s, yy, dy), a, b, y, rtol, atol)?;
        integrate(&problem)
    };
    let (traj, vault) = if crosses {
        let pre_end = if downward { t0 + VAULT_HALF } else { t0 - VAULT_HALF };
        let post_start = if downward { t0 - VAULT_HALF } else { t0 + VAULT_HALF };
        let mut traj = adaptive(start, pre_end, y0)?;
        let y_vault = traj.states.last().unwrap().clone();
        let series = build_vault_series(sys, pre_end, &y_vault);
        let y_post = series.state_at(post_start);
        let leg2 = adaptive(post_start, s_end, y_post.clone())?;
        // bridge the window so the composed trajectory stays contiguous
        let bridge = Trajectory::bridge(pre_end, post_start, y_vault, y_post);
        traj.concat(bridge)?;
        traj.concat(leg2)?;
        (traj, Some(series))
    } else {
        (adaptive(start, s_end, y0)?, None)
    };
    Ok(TwSolution {
        sys: sys.clone(),
        traj,
        cutoff,
        handoff: if downward { start } else { cutoff },
        vault,
    })
}

/// Solve for the listed targets; the spec-facing convenience wrapper.
pub fn solve(sys: &TwSystemSpec, cutoff: f64, targets: &[f64]) -> Result<Vec<TwPoint>> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no targets".into()));
    }
    let downward = matches!(sys.family, TwFamily::AiryType);
    let far = if downward {
        targets.iter().cloned().fold(f64::INFINITY, f64::min)
    } else {
        targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    };
    let sol = integrate_system(sys, cutoff, far)?;
    targets.iter().map(|&s| sol.eval(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioning::condition;
    use crate::fredholm::{fredholm_det, nystrom_spectrum};
    use crate::kernel::{make_kernel, Family};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn airy_system(t: C64) -> TwSystemSpec {
        let base = make_kernel(Family::Airy).unwrap();
        let ck = condition(&base, t).unwrap();
        build_system(&ck).unwrap()
    }

    fn bessel_system(nu: f64, t: C64) -> TwSystemSpec {
        let base = make_kernel(Family::Bessel { nu }).unwrap();
        let ck = condition(&base, t).unwrap();
        build_system(&ck).unwrap()
    }

    #[test]
    fn coefficient_extraction_examples() {
        let sys = airy_system(c(-2.0, 0.0));
        assert!((sys.gamma[3] - c(-1.0, 0.0)).norm() < 1e-12, "gamma3 airy");
        assert!((sys.beta[2] - c(1.0, 0.0)).norm() < 1e-12, "beta2 airy");
        let sysb = bessel_system(0.0, c(4.0, 0.0));
        assert!((sysb.gamma[3] - c(0.25, 0.0)).norm() < 1e-12, "gamma3 bessel");
    }

    #[test]
    fn coefficients_byte_equal_to_conditioning_output() {
        let base = make_kernel(Family::Airy).unwrap();
        let ck = condition(&base, c(-1.0, 1e-10)).unwrap();
        let sys = build_system(&ck).unwrap();
        for j in 0..=2 {
            assert_eq!(sys.alpha[j], ck.connection.a.coeff(j));
            assert_eq!(sys.beta[j], ck.connection.b.coeff(j));
        }
        for j in 0..=3 {
            assert_eq!(sys.gamma[j], ck.connection.c.coeff(j));
        }
    }

    #[test]
    fn unsupported_families_rejected() {
        let sine = make_kernel(Family::Sine).unwrap();
        assert!(build_system(&sine).is_err());
        let ck = condition(&sine, c(0.0, 0.0)).unwrap();
        assert!(build_system(&ck).is_err());
    }

    #[test]
    fn closure_limits() {
        let sys = airy_system(c(-2.0, 0.0));
        let zero = TwState {
            q0: c(0.0, 0.0),
            p0: c(0.0, 0.0),
            u: [c(0.0, 0.0); 3],
            v: [c(0.0, 0.0); 3],
            w: [c(0.0, 0.0); 2],
            logdet: c(0.0, 0.0),
        };
        let cl = algebraic_closure(&sys, 1.7, &zero);
        for q in cl.q {
            assert_eq!(q, c(0.0, 0.0));
        }
        // free limit: u, v, w = 0 gives q1 = s q0, p1 = s p0
        let st = TwState { q0: c(0.3, 0.0), p0: c(-0.2, 0.0), ..zero.clone() };
        let cl = algebraic_closure(&sys, 2.5, &st);
        assert!((cl.q[1] - c(2.5 * 0.3, 0.0)).norm() < 1e-15);
        assert!((cl.p[1] - c(2.5 * -0.2, 0.0)).norm() < 1e-15);
        assert_eq!(cl.vt[0], st.v[0]);
    }

    #[test]
    fn universal_block_signs() {
        let t = c(0.0, 1e-10);
        let mk_state = || TwState {
            q0: c(1.0, 0.0),
            p0: c(0.0, 0.0),
            u: [c(0.0, 0.0); 3],
            v: [c(0.0, 0.0); 3],
            w: [c(0.0, 0.0); 2],
            logdet: c(0.0, 0.0),
        };
        let sys = airy_system(c(-2.0, 1e-10));
        let y = mk_state().to_vec();
        let mut dy = vec![c(0.0, 0.0); STATE_DIM];
        rhs(&sys, 2.0, &y, &mut dy);
        assert!((dy[2] - c(-1.0, 0.0)).norm() < 1e-12, "airy u0' = -q0^2");
        assert!(dy[5].norm() < 1e-12, "v0' = 0 when p0 = 0");
        assert!(dy[8].norm() < 1e-12, "w0' = 0");
        let sysb = bessel_system(0.0, c(4.0, 1e-10));
        let mut dyb = vec![c(0.0, 0.0); STATE_DIM];
        rhs(&sysb, 2.0, &y, &mut dyb);
        assert!((dyb[2] - c(1.0, 0.0)).norm() < 1e-12, "bessel u0' = +q0^2");
        let _ = t;
    }

    #[test]
    fn rhs_quadratic_structure() {
        // with q0 = p0 = 0 the whole derivative vanishes regardless of u,v,w
        let sys = airy_system(c(-2.0, 1e-10));
        let st = TwState {
            q0: c(0.0, 0.0),
            p0: c(0.0, 0.0),
            u: [c(0.3, 0.0), c(-0.1, 0.0), c(0.05, 0.0)],
            v: [c(0.2, 0.0), c(0.1, 0.0), c(-0.04, 0.0)],
            w: [c(0.6, 0.0), c(-0.2, 0.0)],
            logdet: c(0.0, 0.0),
        };
        let mut dy = vec![c(0.0, 0.0); STATE_DIM];
        rhs(&sys, 1.0, &st.to_vec(), &mut dy);
        for (i, v) in dy.iter().enumerate().skip(2) {
            assert!(v.norm() < 1e-14, "dy[{i}] = {v}");
        }
    }

    #[test]
    fn airy_boundary_values() {
        let sys = airy_system(c(-2.0, 0.0));
        let st = boundary_state(&sys, 10.0).unwrap();
        assert!(st.u[0].norm() <= 1e-10, "tail moment u0 = {}", st.u[0].norm());
        let (phi, _) = sys.kernel.components(10.0);
        assert_eq!(st.q0, phi);
        assert!(boundary_state(&sys, 5.0).is_err());
    }

    #[test]
    fn bessel_boundary_values() {
        let sys = bessel_system(0.0, c(4.0, 0.0));
        let st = boundary_state(&sys, 1e-10).unwrap();
        for m in st.u.iter().chain(st.v.iter()).chain(st.w.iter()) {
            assert!(m.norm() < 1e-9, "vanishing range moment {m}");
        }
        let (phi, _) = sys.kernel.components(1e-10);
        assert_eq!(st.q0, phi);
        assert!(boundary_state(&sys, 1e-6).is_err());
    }

    #[test]
    fn airy_cross_route_single_point() {
        // TW integral against the quadrature determinant at one interior target
        let eps = 1e-10;
        let t = c(-2.0, eps);
        let sys = airy_system(t);
        let lambda = 10.0;
        let pts = solve(&sys, lambda, &[0.0]).unwrap();
        let ck = &sys.kernel;
        let s_ny = nystrom_spectrum(ck, 0.0, lambda, 200).unwrap();
        let ln_det_ny = fredholm_det(&s_ny, 1.0).ln();
        let rel = (pts[0].logdet - ln_det_ny).abs() / ln_det_ny.abs();
        assert!(rel <= 1e-6, "cross-route deviation {rel} ({} vs {ln_det_ny})", pts[0].logdet);
        assert!(pts[0].imag_residual < 1e-5);
        assert!(pts[0].r >= -1e-8);
    }

    #[test]
    fn airy_locus_vanishing_and_crossing() {
        let eps = 1e-10;
        let sys = airy_system(c(-2.0, eps));
        let sol = integrate_system(&sys, 10.0, -5.0).unwrap();
        // q0 and p0 vanish at the locus relative to their trajectory scale
        let at_locus = sol.eval(-2.0).unwrap();
        let mut max_q: f64 = 0.0;
        let mut max_p: f64 = 0.0;
        let mut s = -5.0;
        while s <= 10.0 {
            let p = sol.eval(s).unwrap();
            max_q = max_q.max(p.q0.abs());
            max_p = max_p.max(p.p0.abs());
            s += 0.25;
        }
        assert!(at_locus.q0.abs() <= 1e-6 * max_q, "q0 at locus {} vs max {max_q}", at_locus.q0);
        assert!(at_locus.p0.abs() <= 1e-6 * max_p, "p0 at locus {} vs max {max_p}", at_locus.p0);
        // crossing with eps = 0 is rejected
        let sys0 = airy_system(c(-2.0, 0.0));
        assert!(matches!(integrate_system(&sys0, 10.0, -5.0), Err(Error::PoleAtLocus)));
    }

    #[test]
    fn bessel_cross_route_single_point() {
        let eps = 1e-10;
        let sys = bessel_system(0.0, c(4.0, eps));
        let pts = solve(&sys, 1e-10, &[2.0]).unwrap();
        let ck = &sys.kernel;
        let s_ny = nystrom_spectrum(ck, 1e-12, 2.0, 200).unwrap();
        let ln_det_ny = fredholm_det(&s_ny, 1.0).ln();
        let rel = (pts[0].logdet - ln_det_ny).abs() / ln_det_ny.abs();
        assert!(rel <= 1e-6, "cross-route deviation {rel} ({} vs {ln_det_ny})", pts[0].logdet);
    }
}
