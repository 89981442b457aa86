//! User-facing spectral statistics at the soft and hard edges: gap
//! probabilities, distributions of the k-th extremal eigenvalue, Janossy
//! densities, and the joint density of the two extremal eigenvalues, each
//! available through the endpoint-ODE route and the quadrature route.

use crate::conditioning::condition;
use crate::error::{Error, Result};
use crate::fredholm::{counting_probs_upto, fredholm_det, nystrom_spectrum, NystromSpectrum};
use crate::kernel::{make_kernel, Family, KernelSpec};
use crate::twode::{build_system, integrate_system, TwSolution};
use num_complex::Complex64;

/// Edge family selector for the user-facing operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeFamily {
    /// Soft edge: largest eigenvalues of Hermitian ensembles.
    Airy,
    /// Hard edge in the squared (eigenvalue) variable.
    Bessel { nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Tw,
    Nystrom,
}

/// Numerical knobs shared by the operations in this module.
#[derive(Debug, Clone, Copy)]
pub struct NumericParams {
    /// Quadrature order of the Nystrom discretization.
    pub m: usize,
    /// Imaginary regularization of conditioned loci.
    pub epsilon: f64,
    /// Upper cutoff standing in for +infinity at the soft edge.
    pub lambda: f64,
    /// Hard-edge lower cutoff of determinant intervals.
    pub mu_det: f64,
    /// Hard-edge boundary point of the endpoint ODE.
    pub mu_solve: f64,
    /// Base step of the Richardson-extrapolated endpoint derivative.
    pub fd_step: f64,
}

impl Default for NumericParams {
    fn default() -> Self {
        NumericParams {
            m: 200,
            epsilon: 1e-10,
            lambda: 10.0,
            mu_det: 1e-12,
            mu_solve: 1e-10,
            fd_step: 1e-4,
        }
    }
}

/// Grid metadata carried along with computed values.
#[derive(Debug, Clone)]
pub struct GridMeta {
    pub family: EdgeFamily,
    pub route: Option<Route>,
    pub params: NumericParams,
}

/// A computed distribution on a one-dimensional grid.
#[derive(Debug, Clone)]
pub struct DistributionGrid {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: GridMeta,
}

pub(crate) fn base_kernel(family: EdgeFamily) -> Result<KernelSpec> {
    match family {
        EdgeFamily::Airy => make_kernel(Family::Airy),
        EdgeFamily::Bessel { nu } => make_kernel(Family::Bessel { nu }),
    }
}

/// One-point density of the base edge kernel.
pub fn edge_rho1(family: EdgeFamily, s: f64) -> Result<f64> {
    let k = base_kernel(family)?;
    k.require_in_window(s)?;
    Ok(k.rho1(s))
}

fn interval(family: EdgeFamily, s: f64, p: &NumericParams) -> (f64, f64) {
    match family {
        EdgeFamily::Airy => (s, p.lambda),
        EdgeFamily::Bessel { .. } => (p.mu_det, s),
    }
}

fn spectrum(family: EdgeFamily, s: f64, p: &NumericParams) -> Result<NystromSpectrum> {
    let k = base_kernel(family)?;
    let (lo, hi) = interval(family, s, p);
    nystrom_spectrum(&k, lo, hi, p.m)
}

/// Gap probability E_0 of the edge interval; quadrature route only (the
/// endpoint-ODE route applies to conditioned kernels).
pub fn gap_probability(family: EdgeFamily, s: f64, route: Route, p: &NumericParams) -> Result<f64> {
    if route == Route::Tw {
        return Err(Error::UnsupportedRoute(
            "the endpoint-ODE route computes conditioned kernels; use the quadrature route for bare gaps".into(),
        ));
    }
    let (lo, hi) = interval(family, s, p);
    if (hi - lo).abs() < 1e-14 {
        return Ok(1.0);
    }
    Ok(fredholm_det(&spectrum(family, s, p)?, 1.0))
}

/// Counting probabilities E_0..E_pmax on the edge interval.
pub fn counting_probs(family: EdgeFamily, s: f64, pmax: usize, p: &NumericParams) -> Result<Vec<f64>> {
    Ok(counting_probs_upto(&spectrum(family, s, p)?, pmax))
}

/// Richardson-extrapolated central derivative of f at s with base step h.
fn derivative<F: FnMut(f64) -> Result<f64>>(mut f: F, s: f64, h: f64) -> Result<f64> {
    let dh = (f(s + h)? - f(s - h)?) / (2.0 * h);
    let dh2 = (f(s + 0.5 * h)? - f(s - 0.5 * h)?) / h;
    Ok((4.0 * dh2 - dh) / 3.0)
}

/// P_1..P_kmax at one point: the densities of the k-th extremal eigenvalue,
/// from the cumulative identity Prob(k-th beyond s) = sum_(j<k) E_j.
pub fn pk_all(family: EdgeFamily, kmax: usize, s: f64, p: &NumericParams) -> Result<Vec<f64>> {
    if kmax == 0 || kmax > 8 {
        return Err(Error::InvalidArgument(format!("k = {kmax} outside 1..=8")));
    }
    let sign = match family {
        EdgeFamily::Airy => 1.0,
        EdgeFamily::Bessel { .. } => -1.0,
    };
    // cumulative sums of E_j at the four shifted points, one spectrum each
    let cum = |x: f64| -> Result<Vec<f64>> {
        let e = counting_probs(family, x, kmax - 1, p)?;
        let mut acc = 0.0;
        Ok(e.iter()
            .map(|&v| {
                acc += v;
                acc
            })
            .collect())
    };
    let h = p.fd_step;
    let (fp, fm) = (cum(s + h)?, cum(s - h)?);
    let (gp, gm) = (cum(s + 0.5 * h)?, cum(s - 0.5 * h)?);
    Ok((0..kmax)
        .map(|j| {
            let dh = (fp[j] - fm[j]) / (2.0 * h);
            let dh2 = (gp[j] - gm[j]) / h;
            sign * (4.0 * dh2 - dh) / 3.0
        })
        .collect())
}

/// Distribution of the k-th extremal eigenvalue on a grid.
pub fn p_k(family: EdgeFamily, k: usize, s_grid: &[f64], p: &NumericParams) -> Result<DistributionGrid> {
    let mut values = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        values.push(pk_all(family, k, s, p)?[k - 1]);
    }
    Ok(DistributionGrid {
        s: s_grid.to_vec(),
        values,
        meta: GridMeta { family, route: None, params: *p },
    })
}

/// The conditioned kernel of the family at locus t (with the default
/// regularization from the parameter set).
pub fn conditioned_kernel(family: EdgeFamily, t: f64, p: &NumericParams) -> Result<KernelSpec> {
    let base = base_kernel(family)?;
    condition(&base, Complex64::new(t, p.epsilon))
}

/// Endpoint-ODE solution for the conditioned kernel, covering targets out to `far`.
pub fn tw_solution(family: EdgeFamily, t: f64, far: f64, p: &NumericParams) -> Result<TwSolution> {
    let ck = conditioned_kernel(family, t, p)?;
    let sys = build_system(&ck)?;
    let cutoff = match family {
        EdgeFamily::Airy => p.lambda,
        EdgeFamily::Bessel { .. } => p.mu_solve,
    };
    integrate_system(&sys, cutoff, far)
}

/// Janossy density J_1(t; I): the probability density of a particle at t with
/// none elsewhere in the edge interval.
pub fn janossy_j1(family: EdgeFamily, t: f64, s: f64, route: Route, p: &NumericParams) -> Result<f64> {
    let rho = edge_rho1(family, t)?;
    if rho <= 1e-12 {
        return Err(Error::ZeroDensity { t });
    }
    match route {
        Route::Nystrom => {
            let ck = conditioned_kernel(family, t, p)?;
            let (lo, hi) = interval(family, s, p);
            let det = fredholm_det(&nystrom_spectrum(&ck, lo, hi, p.m)?, 1.0);
            Ok(rho * det)
        }
        Route::Tw => {
            let sol = tw_solution(family, t, s, p)?;
            Ok(rho * sol.eval(s)?.logdet.exp())
        }
    }
}

/// J_(1,p): a particle at t plus exactly p others in the edge interval.
pub fn janossy_j1p(family: EdgeFamily, t: f64, s: f64, p_extra: usize, p: &NumericParams) -> Result<f64> {
    let rho = edge_rho1(family, t)?;
    if rho <= 1e-12 {
        return Err(Error::ZeroDensity { t });
    }
    let ck = conditioned_kernel(family, t, p)?;
    let (lo, hi) = interval(family, s, p);
    let spec = nystrom_spectrum(&ck, lo, hi, p.m)?;
    Ok(rho * counting_probs_upto(&spec, p_extra)[p_extra])
}

/// Joint density of the two extremal eigenvalues at (t, s), t extremal.
pub fn joint_p12(family: EdgeFamily, t: f64, s: f64, route: Route, p: &NumericParams) -> Result<f64> {
    match joint_p12_row(family, t, &[s], route, p) {
        Ok(v) => Ok(v[0]),
        Err(e) => Err(e),
    }
}

/// Joint density along one row t = const; the endpoint-ODE route reuses a
/// single trajectory for the whole row.
pub fn joint_p12_row(
    family: EdgeFamily,
    t: f64,
    s_grid: &[f64],
    route: Route,
    p: &NumericParams,
) -> Result<Vec<f64>> {
    let rho = edge_rho1(family, t)?;
    if rho <= 1e-12 {
        return Err(Error::ZeroDensity { t });
    }
    let ordered = |s: f64| match family {
        EdgeFamily::Airy => s < t,     // second-largest below the largest
        EdgeFamily::Bessel { .. } => s > t, // second-smallest above the smallest
    };
    match route {
        Route::Tw => {
            let far = match family {
                EdgeFamily::Airy => s_grid.iter().cloned().fold(t, f64::min),
                EdgeFamily::Bessel { .. } => s_grid.iter().cloned().fold(t, f64::max),
            };
            let sol = tw_solution(family, t, far, p)?;
            s_grid
                .iter()
                .map(|&s| {
                    if !ordered(s) {
                        return Ok(0.0);
                    }
                    let pt = sol.eval(s)?;
                    Ok(rho * pt.r * pt.logdet.exp())
                })
                .collect()
        }
        Route::Nystrom => {
            let ck = conditioned_kernel(family, t, p)?;
            let sign = match family {
                EdgeFamily::Airy => 1.0,
                EdgeFamily::Bessel { .. } => -1.0,
            };
            s_grid
                .iter()
                .map(|&s| {
                    if !ordered(s) {
                        return Ok(0.0);
                    }
                    let ln_det = |x: f64| -> Result<f64> {
                        let (lo, hi) = interval(family, x, p);
                        Ok(fredholm_det(&nystrom_spectrum(&ck, lo, hi, p.m)?, 1.0).ln())
                    };
                    let r = sign * derivative(ln_det, s, p.fd_step)?;
                    let det = ln_det(s)?.exp();
                    Ok(rho * r * det)
                })
                .collect()
        }
    }
}

/// Convert a joint density value from squared (eigenvalue) variables to
/// singular-value variables: the caller supplies P(t^2, s^2).
pub fn to_singular_values(t: f64, s: f64, p_at_squared: f64) -> f64 {
    4.0 * t * s * p_at_squared
}
