//! Gauss-Legendre quadrature rules with Newton-refined nodes.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Nodes and weights of a Gauss-Legendre rule mapped to a target interval.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
    pub lo: f64,
    pub hi: f64,
}

impl QuadratureRule {
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// (P_M(x), P'_M(x)) by the three-term recurrence.
fn legendre_pair(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if order == 0 {
        return (1.0, 0.0);
    }
    for k in 1..order {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = order as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule of the given order on (lo, hi); nodes refined to 1e-15.
pub fn gauss_legendre(order: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    if order < 1 {
        return Err(Error::InvalidArgument("quadrature order must be >= 1".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!("bad quadrature interval ({lo}, {hi})")));
    }
    let m = order;
    let mut xs = vec![0.0f64; m];
    let half = m / 2;
    for i in 0..half + m % 2 {
        // Chebyshev-flavored initial guess for the (i+1)-th root from the right
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut ok = false;
        for _ in 0..100 {
            let (p, d) = legendre_pair(m, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::QuadratureNoConvergence(format!("legendre root {i} of {m}")));
        }
        xs[m - 1 - i] = x;
        xs[i] = -x;
    }
    if m % 2 == 1 {
        xs[m / 2] = 0.0;
    }
    let mid = 0.5 * (lo + hi);
    let span = 0.5 * (hi - lo);
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for &x in xs.iter() {
        let (_, d) = legendre_pair(m, x);
        let w = if m == 1 { 2.0 } else { 2.0 / ((1.0 - x * x) * d * d) };
        nodes.push(mid + span * x);
        weights.push(span * w);
    }
    Ok(QuadratureRule { nodes, weights, order: m, lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_closed_form() {
        let r = gauss_legendre(1, -1.0, 1.0).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert_eq!(r.weights, vec![2.0]);
    }

    #[test]
    fn order_two_closed_form() {
        let r = gauss_legendre(2, -1.0, 1.0).unwrap();
        let s = 1.0 / 3.0f64.sqrt();
        assert!((r.nodes[0] + s).abs() < 1e-15);
        assert!((r.nodes[1] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        assert!((r.weights[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn order_three_integrates_quartic() {
        let r = gauss_legendre(3, -1.0, 1.0).unwrap();
        let v: f64 = r.integrate(|x| x.powi(4));
        assert!((v - 0.4).abs() < 1e-15);
    }

    #[test]
    fn invariants_hold_across_orders() {
        for &(m, lo, hi) in &[(5usize, 0.0, 1.0), (16, -3.0, 7.0), (64, 1e-12, 13.0), (200, -7.0, 10.0)] {
            let r = gauss_legendre(m, lo, hi).unwrap();
            for w in &r.weights {
                assert!(*w > 0.0);
            }
            for pair in r.nodes.windows(2) {
                assert!(pair[0] < pair[1]);
            }
            assert!(r.nodes[0] > lo && *r.nodes.last().unwrap() < hi);
            let total: f64 = r.weights.iter().sum();
            assert!((total - (hi - lo)).abs() <= 1e-14 * (hi - lo));
            // exactness up to degree 2M-1 (capped to stay in range for large orders)
            let deg = (2 * m - 1).min(25) as i32;
            let got: f64 = r.integrate(|x| x.powi(deg));
            let want = (hi.powi(deg + 1) - lo.powi(deg + 1)) / (deg as f64 + 1.0);
            assert!(
                (got - want).abs() <= 1e-13 * want.abs().max(1.0),
                "degree {deg} on ({lo},{hi}): {got} vs {want}"
            );
        }
    }

    #[test]
    fn precondition_errors() {
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
        assert!(gauss_legendre(4, 1.0, 1.0).is_err());
        assert!(gauss_legendre(4, 2.0, 1.0).is_err());
        assert!(gauss_legendre(4, f64::NEG_INFINITY, 1.0).is_err());
    }
}
