//! Nystrom quadrature oracle: discretize a kernel on an interval, take the
//! spectrum of the symmetrized matrix sqrt(w_a) K(x_a, x_b) sqrt(w_b), and
//! read off Fredholm determinants, counting probabilities, and resolvents as
//! exact functions of that one spectrum.

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::linalg;
use crate::specfun::{gauss_legendre, QuadratureRule};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub use crate::linalg::sym_eigen;

/// Eigenvalues with clamping margin used in counting probabilities.
const UNIT_CLAMP: f64 = 1e-13;

/// Spectrum of the symmetrized Nystrom discretization of a kernel.
#[derive(Debug, Clone)]
pub struct NystromSpectrum {
    pub lo: f64,
    pub hi: f64,
    pub order: usize,
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    pub rule: QuadratureRule,
}

fn spectrum_from_matrix(mat: DMatrix<f64>, rule: QuadratureRule, lo: f64, hi: f64, m: usize) -> Result<NystromSpectrum> {
    let eigenvalues = linalg::sym_eigen(&mat)?;
    Ok(NystromSpectrum { lo, hi, order: m, eigenvalues, rule })
}

/// Symmetrized Nystrom matrix of a kernel (real part for conditioned kernels
/// with nonzero regularization; the imaginary part is an O(eps) artifact).
pub fn nystrom_matrix(k: &KernelSpec, rule: &QuadratureRule) -> DMatrix<f64> {
    let m = rule.order;
    let comps: Vec<(Complex64, Complex64)> = rule.nodes.iter().map(|&x| k.components(x)).collect();
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let mut mat = DMatrix::<f64>::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let v = k
                .cd_from_components(rule.nodes[a], comps[a], rule.nodes[b], comps[b])
                .re
                * sw[a]
                * sw[b];
            mat[(a, b)] = v;
            mat[(b, a)] = v;
        }
    }
    mat
}

/// The same matrix with its imaginary part retained.
pub fn nystrom_matrix_complex(k: &KernelSpec, rule: &QuadratureRule) -> DMatrix<Complex64> {
    let m = rule.order;
    let comps: Vec<(Complex64, Complex64)> = rule.nodes.iter().map(|&x| k.components(x)).collect();
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let mut mat = DMatrix::<Complex64>::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let v = k.cd_from_components(rule.nodes[a], comps[a], rule.nodes[b], comps[b]) * (sw[a] * sw[b]);
            mat[(a, b)] = v;
            mat[(b, a)] = v;
        }
    }
    mat
}

/// Spectrum of the quadrature discretization of `k` on (lo, hi) at order M.
pub fn nystrom_spectrum(k: &KernelSpec, lo: f64, hi: f64, m: usize) -> Result<NystromSpectrum> {
    if m < 8 {
        return Err(Error::InvalidArgument(format!("quadrature order {m} < 8")));
    }
    k.require_in_window(lo)?;
    k.require_in_window(hi)?;
    let rule = gauss_legendre(m, lo, hi)?;
    let mat = nystrom_matrix(k, &rule);
    spectrum_from_matrix(mat, rule, lo, hi, m)
}

/// Spectrum of an arbitrary symmetric kernel function (test support).
pub fn nystrom_spectrum_of(f: impl Fn(f64, f64) -> f64, lo: f64, hi: f64, m: usize) -> Result<NystromSpectrum> {
    if m < 8 {
        return Err(Error::InvalidArgument(format!("quadrature order {m} < 8")));
    }
    let rule = gauss_legendre(m, lo, hi)?;
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let mut mat = DMatrix::<f64>::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let v = f(rule.nodes[a], rule.nodes[b]) * sw[a] * sw[b];
            mat[(a, b)] = v;
            mat[(b, a)] = v;
        }
    }
    spectrum_from_matrix(mat, rule, lo, hi, m)
}

/// Det(I - z K) = prod (1 - z lambda_i).
pub fn fredholm_det(s: &NystromSpectrum, z: f64) -> f64 {
    s.eigenvalues.iter().map(|&l| 1.0 - z * l).product()
}

/// Counting probabilities E_0..E_pmax in one pass:
/// E_p = prod(1 - lambda) * e_p(lambda/(1 - lambda)), with the elementary
/// symmetric polynomials built by the prefix recurrence.
pub fn counting_probs_upto(s: &NystromSpectrum, pmax: usize) -> Vec<f64> {
    let mut det = 1.0f64;
    let mut esp = vec![0.0f64; pmax + 1];
    esp[0] = 1.0;
    for &l in &s.eigenvalues {
        let lc = l.min(1.0 - UNIT_CLAMP);
        det *= 1.0 - lc;
        let r = lc / (1.0 - lc);
        for j in (1..=pmax).rev() {
            esp[j] += r * esp[j - 1];
        }
    }
    esp.iter().map(|e| det * e).collect()
}

/// Probability of exactly p particles in the interval.
pub fn counting_prob(s: &NystromSpectrum, p: usize) -> Result<f64> {
    if p > s.order {
        return Err(Error::InvalidArgument(format!("p = {p} exceeds quadrature order {}", s.order)));
    }
    Ok(counting_probs_upto(s, p)[p])
}

/// Resolvent kernel value R(x, y) = <x| K (I - K)^-1 |y> on the interval of
/// the rule, evaluated by the Nystrom linear system plus interpolation.
/// x and y may lie outside (lo, hi); the Nystrom extension is used there.
pub fn resolvent_value(k: &KernelSpec, lo: f64, hi: f64, m: usize, x: f64, y: f64) -> Result<f64> {
    k.require_in_window(x)?;
    k.require_in_window(y)?;
    let rule = gauss_legendre(m, lo, hi)?;
    let mat = nystrom_matrix(k, &rule);
    // guard: (I - K) must be invertible
    let eigenvalues = linalg::sym_eigen(&mat)?;
    if eigenvalues.iter().any(|l| (1.0 - l).abs() < 1e-12) {
        return Err(Error::SingularSystem("1 is an eigenvalue of the discretized kernel".into()));
    }
    let n = rule.order;
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let mut system = DMatrix::<f64>::identity(n, n) - &mat;
    // rhs_a = sqrt(w_a) K(x_a, y)
    let cy = k.components(y);
    let cx = k.components(x);
    let comps: Vec<(Complex64, Complex64)> = rule.nodes.iter().map(|&u| k.components(u)).collect();
    let rhs = nalgebra::DVector::<f64>::from_fn(n, |a, _| {
        sw[a] * k.cd_from_components(rule.nodes[a], comps[a], y, cy).re
    });
    let lu = system.clone().lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("Nystrom resolvent system".into()))?;
    let _ = &mut system;
    let mut r = k.cd_from_components(x, cx, y, cy).re;
    for a in 0..n {
        r += sw[a] * k.cd_from_components(x, cx, rule.nodes[a], comps[a]).re * sol[a];
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioning::condition;
    use crate::kernel::{make_kernel, Family};

    #[test]
    fn zero_kernel_spectrum_and_resolvent() {
        let s = nystrom_spectrum_of(|_, _| 0.0, 0.0, 1.0, 16).unwrap();
        for &l in &s.eigenvalues {
            assert_eq!(l, 0.0);
        }
        assert_eq!(fredholm_det(&s, 1.0), 1.0);
    }

    #[test]
    fn airy_contraction_property() {
        let k = make_kernel(Family::Airy).unwrap();
        let s = nystrom_spectrum(&k, 0.0, 10.0, 200).unwrap();
        assert!(s.eigenvalues[0] < 1.0);
        assert!(*s.eigenvalues.last().unwrap() > -1e-12);
    }

    #[test]
    fn trace_matches_diagonal_sum() {
        let k = make_kernel(Family::Airy).unwrap();
        let m = 120;
        let s = nystrom_spectrum(&k, -2.0, 6.0, m).unwrap();
        let tr_eig: f64 = s.eigenvalues.iter().sum();
        let tr_diag: f64 = s
            .rule
            .nodes
            .iter()
            .zip(s.rule.weights.iter())
            .map(|(&x, &w)| k.diag(x).re * w)
            .sum();
        assert!((tr_eig - tr_diag).abs() <= 1e-11 * tr_diag.abs(), "{tr_eig} vs {tr_diag}");
    }

    #[test]
    fn det_at_zero_is_one_and_monotone() {
        let k = make_kernel(Family::Airy).unwrap();
        let s = nystrom_spectrum(&k, 0.0, 10.0, 80).unwrap();
        assert_eq!(fredholm_det(&s, 0.0), 1.0);
        let mut prev = 1.0;
        for i in 1..=10 {
            let z = i as f64 / 10.0;
            let d = fredholm_det(&s, z);
            assert!(d <= prev + 1e-15, "not monotone at z={z}");
            prev = d;
        }
    }

    #[test]
    fn airy_gap_probability_value_and_convergence() {
        let k = make_kernel(Family::Airy).unwrap();
        let s200 = nystrom_spectrum(&k, 0.0, 10.0, 200).unwrap();
        let s400 = nystrom_spectrum(&k, 0.0, 10.0, 400).unwrap();
        let d200 = fredholm_det(&s200, 1.0);
        let d400 = fredholm_det(&s400, 1.0);
        assert!((d200 - 0.96937).abs() < 1e-5, "gap at 0: {d200}");
        assert!((d200 - d400).abs() <= 1e-8, "M-convergence: {}", (d200 - d400).abs());
    }

    #[test]
    fn counting_probabilities_identities() {
        let k = make_kernel(Family::Airy).unwrap();
        let s = nystrom_spectrum(&k, -2.0, 10.0, 200).unwrap();
        // p = 0 reduces to the determinant at z = 1
        let e0 = counting_prob(&s, 0).unwrap();
        assert!((e0 - fredholm_det(&s, 1.0)).abs() < 1e-14);
        // total probability
        let all = counting_probs_upto(&s, s.order);
        let total: f64 = all.iter().sum();
        assert!((total - 1.0).abs() < 1e-10, "sum E_p = {total}");
        // E_1 in (0,1), stable under M -> 400
        let e1 = counting_prob(&s, 1).unwrap();
        assert!(e1 > 0.0 && e1 < 1.0);
        let s400 = nystrom_spectrum(&k, -2.0, 10.0, 400).unwrap();
        let e1_400 = counting_prob(&s400, 1).unwrap();
        assert!((e1 - e1_400).abs() <= 1e-7, "E1 M-convergence: {}", (e1 - e1_400).abs());
    }

    #[test]
    fn determinant_matches_lu_route() {
        let k = make_kernel(Family::Airy).unwrap();
        let m = 150;
        let rule = gauss_legendre(m, -1.0, 9.0).unwrap();
        let mat = nystrom_matrix(&k, &rule);
        let s = nystrom_spectrum(&k, -1.0, 9.0, m).unwrap();
        let det_eig = fredholm_det(&s, 1.0);
        let det_lu = (DMatrix::<f64>::identity(m, m) - mat).lu().determinant();
        assert!(
            (det_eig - det_lu).abs() <= 1e-11 * det_lu.abs(),
            "{det_eig} vs {det_lu}"
        );
    }

    #[test]
    fn conditioned_imaginary_part_bounds() {
        let base = make_kernel(Family::Airy).unwrap();
        let ck = condition(&base, Complex64::new(-2.0, 1e-10)).unwrap();
        let rule = gauss_legendre(100, -4.0, 8.0).unwrap();
        let cmat = nystrom_matrix_complex(&ck, &rule);
        let scale = cmat.iter().fold(0.0f64, |m, v| m.max(v.re.abs()));
        let max_im = cmat.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        assert!(max_im <= 1e-8 * scale, "imaginary contamination {max_im} vs scale {scale}");
        // determinant with and without the imaginary part
        let n = rule.order;
        let ic = DMatrix::<Complex64>::identity(n, n) - &cmat;
        let det_c = ic.lu().determinant();
        let re_mat = cmat.map(|v| v.re);
        let det_r = (DMatrix::<f64>::identity(n, n) - re_mat).lu().determinant();
        assert!(
            (det_c.re - det_r).abs() <= 1e-7 * det_r.abs(),
            "complex {det_c} vs real {det_r}"
        );
        assert!(det_c.im.abs() <= 1e-7 * det_r.abs());
    }

    #[test]
    fn resolvent_janossy_route_equality() {
        // rho1(t) Det(I - Ktilde_I) = Det(I - K_I) det[R(t,t)] with t outside I
        let base = make_kernel(Family::Airy).unwrap();
        let t = -1.0;
        let (lo, hi, m) = (0.0, 10.0, 200);
        let rho = base.rho1(t);
        let ck = condition(&base, Complex64::new(t, 0.0)).unwrap();
        let s_cond = nystrom_spectrum(&ck, lo, hi, m).unwrap();
        let lhs = rho * fredholm_det(&s_cond, 1.0);
        let s_base = nystrom_spectrum(&base, lo, hi, m).unwrap();
        let r = resolvent_value(&base, lo, hi, m, t, t).unwrap();
        let rhs = fredholm_det(&s_base, 1.0) * r;
        assert!(
            (lhs - rhs).abs() <= 1e-7 * rhs.abs(),
            "janossy routes: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn resolvent_interval_membership_not_required() {
        let k = make_kernel(Family::Airy).unwrap();
        // smoke: evaluation inside the interval as well
        let r = resolvent_value(&k, 0.0, 6.0, 64, 1.0, 2.0).unwrap();
        assert!(r.is_finite());
    }

    #[test]
    fn spectrum_order_floor() {
        let k = make_kernel(Family::Airy).unwrap();
        assert!(nystrom_spectrum(&k, 0.0, 1.0, 4).is_err());
    }
}
