//! Airy function Ai and its derivative on the real line.
//!
//! Evaluation scheme: exponential asymptotics for x above the positive switch,
//! trigonometric asymptotics below the negative switch, and in between Taylor
//! marching along the defining equation y'' = x y from the nearest stable
//! anchor (the exact origin constants for x < 0, an asymptotic seed for x > 0).
//! Marching runs in the direction in which Ai is non-decaying relative to the
//! second solution, so contamination dies off instead of amplifying.

use crate::error::{Error, Result};

/// Ai(0) = 3^(-2/3)/Gamma(2/3)
pub const AI_ZERO: f64 = 0.355_028_053_887_817_24;
/// Ai'(0) = -3^(-1/3)/Gamma(1/3)
pub const AIP_ZERO: f64 = -0.258_819_403_792_806_8;

const VALIDITY: f64 = 200.0;
const POS_SWITCH: f64 = 8.75;
const NEG_SWITCH: f64 = -9.0;
const MARCH_STEP: f64 = 0.75;
const MAX_TERMS: usize = 80;

/// One Taylor step for y'' = x y: given (y, y') at c, return (y, y') at c + h.
fn taylor_step(c: f64, y: f64, yp: f64, h: f64) -> (f64, f64) {
    // a[k] are Taylor coefficients at c; a[k+2] = (c a[k] + a[k-1]) / ((k+1)(k+2))
    let mut a_km1 = 0.0; // a[k-1]
    let mut a_k = y; // a[0]
    let mut a_kp1 = yp; // a[1]
    let mut val = y + yp * h;
    let mut der = yp;
    let mut hk = h; // h^k for the value sum at current k+1
    let mut small_runs = 0; // exact zero coefficients occur (every third at c=0); demand two in a row
    for k in 0..MAX_TERMS {
        let a_kp2 = (c * a_k + a_km1) / (((k + 1) * (k + 2)) as f64);
        hk *= h;
        let term_v = a_kp2 * hk;
        let term_d = a_kp2 * ((k + 2) as f64) * hk / h;
        val += term_v;
        der += term_d;
        if term_v.abs() <= 1e-18 * val.abs().max(1e-30) && term_d.abs() <= 1e-18 * der.abs().max(1e-30) {
            small_runs += 1;
            if small_runs >= 2 && k > 4 {
                break;
            }
        } else {
            small_runs = 0;
        }
        a_km1 = a_k;
        a_k = a_kp1;
        a_kp1 = a_kp2;
    }
    (val, der)
}

/// March (Ai, Ai') from (c0, y, yp) to target x in steps of at most MARCH_STEP.
fn march(mut c: f64, mut y: f64, mut yp: f64, x: f64) -> (f64, f64) {
    while (x - c).abs() > 1e-300 {
        let h = (x - c).clamp(-MARCH_STEP, MARCH_STEP);
        let (ny, nyp) = taylor_step(c, y, yp, h);
        y = ny;
        yp = nyp;
        c += h;
        if c == x {
            break;
        }
    }
    (y, yp)
}

/// Asymptotic u_k, v_k coefficient pair streams (DLMF 9.7.2).
struct AsymCoeffs {
    u: f64,
    v: f64,
    k: usize,
}

impl AsymCoeffs {
    fn new() -> Self {
        AsymCoeffs { u: 1.0, v: 1.0, k: 0 }
    }
    fn advance(&mut self) {
        self.k += 1;
        let k = self.k as f64;
        self.u *= (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / (216.0 * k * (2.0 * k - 1.0));
        self.v = self.u * (6.0 * k + 1.0) / (1.0 - 6.0 * k);
    }
}

/// (Ai, Ai') for x >= POS_SWITCH.
fn asym_positive(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let pref = (-zeta).exp() / (2.0 * std::f64::consts::PI.sqrt());
    let mut cs = AsymCoeffs::new();
    let mut su = 0.0;
    let mut sv = 0.0;
    let mut zk = 1.0; // (-1/zeta)^k
    let mut prev = f64::INFINITY;
    for _ in 0..60 {
        let tu = cs.u * zk;
        if tu.abs() > prev {
            break; // divergence onset
        }
        su += tu;
        sv += cs.v * zk;
        prev = tu.abs();
        if tu.abs() < 1e-18 * su.abs() {
            break;
        }
        cs.advance();
        zk /= -zeta;
    }
    (pref / x.powf(0.25) * su, -pref * x.powf(0.25) * sv)
}

/// (Ai, Ai') for x <= NEG_SWITCH.
fn asym_negative(x: f64) -> (f64, f64) {
    let z = -x;
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let phase = zeta - std::f64::consts::FRAC_PI_4;
    let (sp, cp) = phase.sin_cos();
    let pref = 1.0 / std::f64::consts::PI.sqrt();
    // split u/v streams into even and odd parts of the 1/zeta expansion
    let mut cs = AsymCoeffs::new();
    let (mut ue, mut uo, mut ve, mut vo) = (0.0, 0.0, 0.0, 0.0);
    let mut zk = 1.0; // (1/zeta)^k
    let mut sign = 1.0; // (-1)^(k/2) pattern handled below
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        let tu = cs.u * zk;
        let tv = cs.v * zk;
        if tu.abs() > prev {
            break;
        }
        prev = tu.abs();
        if k % 2 == 0 {
            ue += sign * tu;
            ve += sign * tv;
        } else {
            uo += sign * tu;
            vo += sign * tv;
            sign = -sign; // flips after each odd index: + + - - + + ...
        }
        if tu.abs() < 1e-18 * (ue.abs() + uo.abs()) {
            break;
        }
        cs.advance();
        zk /= zeta;
    }
    let ai = pref / z.powf(0.25) * (cp * ue + sp * uo);
    let aip = pref * z.powf(0.25) * (sp * ve - cp * vo);
    (ai, aip)
}

/// (Ai(x), Ai'(x)) without the validity-window check.
pub(crate) fn airy_pair_unchecked(x: f64) -> (f64, f64) {
    if x >= POS_SWITCH {
        asym_positive(x)
    } else if x > 1.5 {
        // downward from the asymptotic seed: the decaying solution dominates
        let (y, yp) = asym_positive(POS_SWITCH);
        march(POS_SWITCH, y, yp, x)
    } else if x > NEG_SWITCH {
        // short hops from the exact origin constants
        march(0.0, AI_ZERO, AIP_ZERO, x)
    } else {
        asym_negative(x)
    }
}

fn check_window(x: f64) -> Result<()> {
    if !x.is_finite() || x.abs() > VALIDITY {
        return Err(Error::Domain(format!("airy argument {x} outside |x| <= {VALIDITY}")));
    }
    Ok(())
}

/// (Ai(x), Ai'(x)) in one evaluation.
pub fn airy_pair(x: f64) -> Result<(f64, f64)> {
    check_window(x)?;
    Ok(airy_pair_unchecked(x))
}

pub fn airy_ai(x: f64) -> Result<f64> {
    Ok(airy_pair(x)?.0)
}

pub fn airy_ai_prime(x: f64) -> Result<f64> {
    Ok(airy_pair(x)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::quadrature::gauss_legendre;

    #[test]
    fn closed_forms_at_origin() {
        assert!((airy_ai(0.0).unwrap() - 0.3550280539).abs() < 1e-9);
        assert!((airy_ai_prime(0.0).unwrap() - (-0.2588194038)).abs() < 1e-9);
    }

    /// Maclaurin oracle: direct series about 0 summed to machine convergence.
    /// At center 0 the recurrence reads a[n] = a[n-3]/((n-1) n).
    fn maclaurin_pair(x: f64) -> (f64, f64) {
        let mut a = vec![AI_ZERO, AIP_ZERO, 0.0];
        for n in 3..=120usize {
            a.push(a[n - 3] / (((n - 1) * n) as f64));
        }
        let mut v = 0.0;
        let mut d = 0.0;
        for (k, &c) in a.iter().enumerate().rev() {
            v += c * x.powi(k as i32);
            if k >= 1 {
                d += c * (k as f64) * x.powi(k as i32 - 1);
            }
        }
        (v, d)
    }

    #[test]
    fn matches_series_oracle_at_one() {
        let (ai, _) = maclaurin_pair(1.0);
        assert!((airy_ai(1.0).unwrap() - ai).abs() < 1e-12);
    }

    #[test]
    fn matches_series_oracle_small_range() {
        for &x in &[-2.5, -1.0, -0.3, 0.4, 1.7, 2.9] {
            let (ai, aip) = maclaurin_pair(x);
            let (a, ap) = airy_pair(x).unwrap();
            assert!((a - ai).abs() < 1e-13, "Ai at {x}: {a} vs {ai}");
            assert!((ap - aip).abs() < 1e-13, "Ai' at {x}: {ap} vs {aip}");
        }
    }

    #[test]
    fn cross_check_band_positive() {
        // asymptotics and marching must agree through [7, 9]
        for i in 0..=20 {
            let x = 7.0 + 0.1 * i as f64;
            let (ma, mp) = {
                let (y, yp) = asym_positive(12.0);
                march(12.0, y, yp, x)
            };
            let (aa, ap) = asym_positive(x);
            assert!((ma - aa).abs() <= 1e-11 * aa.abs().max(1e-30), "Ai band at {x}");
            assert!((mp - ap).abs() <= 1e-11 * ap.abs().max(1e-30), "Ai' band at {x}");
        }
    }

    #[test]
    fn cross_check_band_negative() {
        for i in 0..=10 {
            let x = -8.0 - 0.2 * i as f64;
            let (ma, mp) = march(0.0, AI_ZERO, AIP_ZERO, x);
            let (aa, ap) = asym_negative(x);
            assert!((ma - aa).abs() <= 1e-11, "Ai neg band at {x}: {ma} vs {aa}");
            assert!((mp - ap).abs() <= 1e-10, "Ai' neg band at {x}");
        }
    }

    #[test]
    fn ode_residual_by_finite_differences() {
        // Ai'' - x Ai = 0 to 1e-10 absolute at 100 random points of [-8, 5].
        // 5-point stencil at h and h/2 with one Richardson level; h sized so
        // ulp noise in the function values stays under the tolerance.
        let h = 0.012;
        let f = |t: f64| airy_ai(t).unwrap();
        let stencil = |x: f64, h: f64| {
            (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
                / (12.0 * h * h)
        };
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..100 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            let x = -8.0 + 13.0 * u;
            let d2 = (16.0 * stencil(x, 0.5 * h) - stencil(x, h)) / 15.0;
            assert!((d2 - x * f(x)).abs() < 1e-10, "residual at {x}: {}", d2 - x * f(x));
        }
    }

    #[test]
    fn integral_representation_oracle() {
        // Rotated contour: Ai(x) = (1/pi) Re[ e^{i pi/6} Int_0^inf
        //   exp(-u^3/3 - x u / 2) (cos + i sin)(sqrt(3) x u / 2) du ]
        use num_complex::Complex64;
        let rot = Complex64::from_polar(1.0, std::f64::consts::PI / 6.0);
        let oracle = |x: f64| -> f64 {
            let upper = 9.0_f64.max(2.0 * x.abs());
            let rule = gauss_legendre(240, 0.0, upper).unwrap();
            let mut acc = Complex64::default();
            for (&u, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
                let damp = (-u * u * u / 3.0 - x * u / 2.0).exp();
                let osc = Complex64::from_polar(1.0, 3.0_f64.sqrt() * x * u / 2.0);
                acc += Complex64::new(w * damp, 0.0) * osc;
            }
            (rot * acc).re / std::f64::consts::PI
        };
        for &x in &[-6.0, -4.2, -2.0, -1.0, 0.0, 0.5, 1.5, 2.5, 4.0, 6.0] {
            let got = airy_ai(x).unwrap();
            let want = oracle(x);
            assert!((got - want).abs() < 1e-11 * want.abs().max(1.0), "x = {x}: {got} vs {want}");
        }
    }

    #[test]
    fn decaying_tail_relative_accuracy() {
        // spot values from the asymptotic regime stay consistent under switch perturbation
        let (a1, _) = asym_positive(10.0);
        let (y, yp) = asym_positive(14.0);
        let (a2, _) = march(14.0, y, yp, 10.0);
        assert!((a1 - a2).abs() < 1e-11 * a1.abs());
    }

    #[test]
    fn domain_window_enforced() {
        assert!(airy_ai(201.0).is_err());
        assert!(airy_ai(f64::NAN).is_err());
        assert!(airy_ai(-201.0).is_err());
        assert!(airy_ai(199.0).is_ok());
    }
}
