//! Bessel function of the first kind J_nu for real order nu > -2 and x >= 0.
//!
//! Ascending series up to the anchor, Taylor marching along the Bessel
//! equation in the mid range, Hankel asymptotics beyond. Marching runs upward
//! from the series anchor, where J is non-decaying relative to Y, so the
//! second solution never contaminates.

use super::gamma::gamma;
use crate::error::{Error, Result};
use std::f64::consts::PI;

const SERIES_MAX: f64 = 8.0;
const HANKEL_MIN: f64 = 34.0;
const MARCH_STEP: f64 = 0.5;
const X_VALIDITY: f64 = 1.0e4;

/// Ascending series J_nu(x) = sum (-1)^m (x/2)^(nu+2m) / (m! Gamma(nu+m+1)).
fn series(nu: f64, x: f64) -> f64 {
    if nu < 0.0 && nu == nu.round() {
        // J_(-n) = (-1)^n J_n avoids the gamma poles in the leading terms
        let n = (-nu) as i64;
        let j = series(-nu, x);
        return if n % 2 == 0 { j } else { -j };
    }
    if x == 0.0 {
        return if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY // negative non-integer order diverges at the origin
        };
    }
    let half = 0.5 * x;
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    let x2 = -half * half;
    for m in 1..200 {
        let mf = m as f64;
        term *= x2 / (mf * (nu + mf));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-280) && mf > half {
            break;
        }
    }
    sum
}

/// One Taylor step for x^2 y'' + x y' + (x^2 - nu^2) y = 0 about c, advancing by h.
fn taylor_step(nu: f64, c: f64, y: f64, yp: f64, h: f64) -> (f64, f64) {
    let nu2 = nu * nu;
    let c2 = c * c;
    let mut a = [0.0f64; 64];
    a[0] = y;
    a[1] = yp;
    let mut val = a[0] + a[1] * h;
    let mut der = a[1];
    let mut hk = h;
    let mut small_runs = 0;
    for k in 0..60usize {
        let kf = k as f64;
        let a_k = a[k];
        let a_km1 = if k >= 1 { a[k - 1] } else { 0.0 };
        let a_km2 = if k >= 2 { a[k - 2] } else { 0.0 };
        let a_kp1 = a[k + 1];
        let num = 2.0 * c * (kf + 1.0) * kf * a_kp1
            + kf * (kf - 1.0) * a_k
            + c * (kf + 1.0) * a_kp1
            + kf * a_k
            + (c2 - nu2) * a_k
            + 2.0 * c * a_km1
            + a_km2;
        let a_kp2 = -num / (c2 * ((kf + 2.0) * (kf + 1.0)));
        a[k + 2] = a_kp2;
        hk *= h;
        let term_v = a_kp2 * hk;
        let term_d = a_kp2 * (kf + 2.0) * hk / h;
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
    }
    (val, der)
}

fn march(nu: f64, mut c: f64, mut y: f64, mut yp: f64, x: f64) -> (f64, f64) {
    while (x - c).abs() > 1e-300 {
        let h = (x - c).clamp(-MARCH_STEP, MARCH_STEP);
        let (ny, nyp) = taylor_step(nu, c, y, yp, h);
        y = ny;
        yp = nyp;
        c += h;
        if c == x {
            break;
        }
    }
    (y, yp)
}

/// Series derivative dJ/dx by term-wise differentiation (x > 0 region).
fn series_prime(nu: f64, x: f64) -> f64 {
    // J'(x) = (J_(nu-1) - J_(nu+1))/2 holds everywhere; at the anchor we want a
    // self-contained pair, so differentiate the series directly.
    if x == 0.0 {
        return match nu {
            v if v == 1.0 => 0.5,
            v if v == 0.0 => 0.0,
            v if v > 1.0 => 0.0,
            _ => f64::INFINITY,
        };
    }
    0.5 * (series(nu - 1.0, x) - series(nu + 1.0, x))
}

/// Hankel asymptotic expansion, x >= HANKEL_MIN.
fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let ex = 8.0 * x;
    // P: 1 - (mu-1)(mu-9)/(2! ex^2) + ...; Q: (mu-1)/ex - (mu-1)(mu-9)(mu-25)/(3! ex^3) + ...
    let mut p = 1.0;
    let mut q = (mu - 1.0) / ex;
    let mut num = mu - 1.0; // running product of (mu - odd^2)
    let mut denom = ex;
    let mut fact = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..30 {
        let kf = k as f64;
        // extend product to (mu - (4k-1)^2) and (mu - (4k+1)^2) for the next P and Q terms
        num *= mu - (4.0 * kf - 1.0) * (4.0 * kf - 1.0);
        denom *= ex;
        fact *= 2.0 * kf;
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        let tp = sign * num / (fact * denom);
        if tp.abs() > prev {
            break;
        }
        prev = tp.abs();
        p += tp;
        num *= mu - (4.0 * kf + 1.0) * (4.0 * kf + 1.0);
        denom *= ex;
        fact *= 2.0 * kf + 1.0;
        let tq = sign * num / (fact * denom);
        q += tq;
        if tp.abs() < 1e-18 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn j_unchecked(nu: f64, x: f64) -> f64 {
    if x <= SERIES_MAX {
        series(nu, x)
    } else if x < HANKEL_MIN {
        let y = series(nu, SERIES_MAX);
        let yp = series_prime(nu, SERIES_MAX);
        march(nu, SERIES_MAX, y, yp, x).0
    } else {
        hankel(nu, x)
    }
}

fn check(nu: f64, x: f64) -> Result<()> {
    if nu <= -1.0 || !nu.is_finite() {
        return Err(Error::Domain(format!("bessel order nu = {nu} must satisfy nu > -1")));
    }
    if !(0.0..=X_VALIDITY).contains(&x) {
        return Err(Error::Domain(format!("bessel argument x = {x} outside [0, {X_VALIDITY}]")));
    }
    Ok(())
}

/// J_nu(x) for nu > -1, 0 <= x <= 1e4.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    check(nu, x)?;
    Ok(j_unchecked(nu, x))
}

/// dJ_nu/dx via the three-term identity J' = (J_(nu-1) - J_(nu+1))/2.
pub fn bessel_j_prime(nu: f64, x: f64) -> Result<f64> {
    check(nu, x)?;
    Ok(0.5 * (j_unchecked(nu - 1.0, x) - j_unchecked(nu + 1.0, x)))
}

/// Kernel-facing order triple (J_(nu-1), J_nu, J_(nu+1)) evaluated together.
pub(crate) fn bessel_j_triple_unchecked(nu: f64, x: f64) -> (f64, f64, f64) {
    (j_unchecked(nu - 1.0, x), j_unchecked(nu, x), j_unchecked(nu + 1.0, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_argument() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(2.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn half_integer_closed_form() {
        // J_(1/2)(x) = sqrt(2/(pi x)) sin x
        let x = PI / 2.0;
        let expect = 2.0 / PI;
        assert!((bessel_j(0.5, x).unwrap() - expect).abs() < 1e-14);
        for &x in &[0.3, 1.0, 2.7, 5.5, 7.9] {
            let expect = (2.0 / (PI * x)).sqrt() * x.sin();
            assert!((bessel_j(0.5, x).unwrap() - expect).abs() < 1e-13, "x = {x}");
            let expect_m = (2.0 / (PI * x)).sqrt() * x.cos();
            assert!((bessel_j(-0.5, x).unwrap() - expect_m).abs() < 1e-13, "J_-1/2 at {x}");
        }
    }

    /// Independent ascending-series oracle, summed to machine convergence.
    fn series_oracle(nu: f64, x: f64) -> f64 {
        let mut sum = 0.0;
        for m in 0..120 {
            let mf = m as f64;
            let g = gamma(mf + 1.0) * gamma(nu + mf + 1.0);
            let t = (-1.0f64).powi(m) * (0.5 * x).powf(nu + 2.0 * mf) / g;
            sum += t;
        }
        sum
    }

    #[test]
    fn matches_series_oracle() {
        let v = bessel_j(1.0, 1.0).unwrap();
        assert!((v - series_oracle(1.0, 1.0)).abs() < 1e-12);
        for &(nu, x) in &[(0.0, 2.0), (1.0, 4.5), (0.5, 6.0), (2.3, 7.5), (-0.7, 3.0)] {
            let got = bessel_j(nu, x).unwrap();
            let want = series_oracle(nu, x);
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "nu={nu} x={x}");
        }
    }

    #[test]
    fn cross_check_band_series_march() {
        // marching seeded below must agree with the direct series around the anchor
        for &nu in &[0.0, 1.0, 0.5, 2.0] {
            let y = series(nu, 6.0);
            let yp = series_prime(nu, 6.0);
            for i in 0..=10 {
                let x = 7.0 + 0.2 * i as f64;
                let (m, _) = march(nu, 6.0, y, yp, x);
                let s = series(nu, x);
                assert!((m - s).abs() < 1e-12, "nu={nu} x={x}: {m} vs {s}");
            }
        }
    }

    #[test]
    fn cross_check_band_march_hankel() {
        for &nu in &[0.0, 1.0, 0.5, 3.0] {
            let y = series(nu, SERIES_MAX);
            let yp = series_prime(nu, SERIES_MAX);
            for i in 0..=8 {
                let x = 33.0 + 0.25 * i as f64;
                let (m, _) = march(nu, SERIES_MAX, y, yp, x);
                let h = hankel(nu, x);
                assert!((m - h).abs() < 1e-11, "nu={nu} x={x}: {m} vs {h}");
            }
        }
    }

    #[test]
    fn recurrence_identity_mid_range() {
        // J_(nu-1)(x) + J_(nu+1)(x) = (2 nu / x) J_nu(x)
        for &nu in &[0.7, 1.0, 2.2] {
            for &x in &[0.9, 5.0, 12.0, 20.0, 50.0, 90.0] {
                let sum = j_unchecked(nu - 1.0, x) + j_unchecked(nu + 1.0, x);
                let rhs = 2.0 * nu / x * j_unchecked(nu, x);
                assert!((sum - rhs).abs() < 1e-12 * (1.0 + rhs.abs()), "nu={nu} x={x}");
            }
        }
    }

    #[test]
    fn prime_matches_finite_difference() {
        let h = 1e-5;
        for &(nu, x) in &[(0.0, 1.0), (1.0, 3.0), (0.3, 10.0), (2.0, 40.0)] {
            let d = (bessel_j(nu, x + h).unwrap() - bessel_j(nu, x - h).unwrap()) / (2.0 * h);
            let p = bessel_j_prime(nu, x).unwrap();
            assert!((d - p).abs() < 1e-8, "nu={nu} x={x}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_j(-1.0, 1.0).is_err());
        assert!(bessel_j(-1.5, 1.0).is_err());
        assert!(bessel_j(0.0, -0.1).is_err());
        assert!(bessel_j(0.0, 1.1e4).is_err());
    }
}
