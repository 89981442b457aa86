//! Real gamma function (Lanczos approximation, g = 7, 9 terms).

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma(x) for real x. Returns inf at the poles (non-positive integers),
/// so reciprocals 1/Gamma vanish there naturally.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        return f64::INFINITY;
    }
    if x < 0.5 {
        // reflection formula
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_values() {
        assert!((gamma(1.0) - 1.0).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() / 24.0 < 1e-14);
        assert!((gamma(10.0) - 362880.0).abs() / 362880.0 < 1e-13);
    }

    #[test]
    fn half_integer_values() {
        let sqrt_pi = PI.sqrt();
        assert!((gamma(0.5) - sqrt_pi).abs() < 1e-14);
        assert!((gamma(1.5) - 0.5 * sqrt_pi).abs() < 1e-14);
        assert!((gamma(-0.5) + 2.0 * sqrt_pi).abs() < 1e-13);
    }

    #[test]
    fn poles_give_infinite_values() {
        assert!(!gamma(0.0).is_finite());
        assert!(!gamma(-1.0).is_finite());
        assert_eq!(1.0 / gamma(0.0), 0.0);
    }

    #[test]
    fn recurrence_holds() {
        for &x in &[0.1, 0.37, 1.9, 3.3, 7.7, 0.666] {
            let lhs = gamma(x + 1.0);
            let rhs = x * gamma(x);
            assert!((lhs - rhs).abs() / rhs.abs() < 5e-14, "x = {x}");
        }
    }
}
