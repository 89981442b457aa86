//! Exhaustive verification of the determinantal identities on small finite
//! point processes with projection kernels. Every Janossy-density formula
//! used in the continuous setting has a finite-matrix counterpart here that
//! can be checked against brute-force enumeration of all configurations.

use crate::error::{Error, Result};
use crate::linalg::sym_eigen;
use itertools::Itertools;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const MAX_GROUND: usize = 12;
const KAPPA_COND_LIMIT: f64 = 1e12;

/// A finite determinantal process given by an n x n projection kernel.
#[derive(Debug, Clone)]
pub struct DiscreteDpp {
    pub kernel: DMatrix<f64>,
    pub rank: usize,
}

/// Random rank-N projection K = V V^t with V an orthonormal n x N frame
/// from the QR factorization of a seeded Gaussian matrix.
pub fn random_projection(n: usize, rank: usize, seed: u64) -> Result<DiscreteDpp> {
    if !(0 < rank && rank < n && n <= MAX_GROUND) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < N < n <= {MAX_GROUND}, got n={n}, N={rank}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<f64>::from_fn(n, rank, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let q = qr.q();
    let kernel = &q * q.transpose();
    Ok(DiscreteDpp { kernel, rank })
}

impl DiscreteDpp {
    pub fn ground_size(&self) -> usize {
        self.kernel.nrows()
    }

    fn minor(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.kernel[(rows[i], cols[j])])
    }

    /// rho_k of a point tuple: determinant of the principal minor.
    pub fn correlation(&self, points: &[usize]) -> f64 {
        self.minor(points, points).determinant()
    }

    /// All N-point configurations with their probabilities.
    pub fn enumerate_point_probs(&self) -> Vec<(Vec<usize>, f64)> {
        let n = self.ground_size();
        (0..n)
            .combinations(self.rank)
            .map(|subset| {
                let p = self.minor(&subset, &subset).determinant();
                (subset, p)
            })
            .collect()
    }

    /// The conditioned kernel K - k^t kappa^-1 k on the full ground set.
    pub fn transformed_kernel(&self, loci: &[usize]) -> Result<DMatrix<f64>> {
        let kappa = self.minor(loci, loci);
        let svd = kappa.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 0.0 || smax / smin > KAPPA_COND_LIMIT {
            return Err(Error::SingularSystem("kappa ill-conditioned".into()));
        }
        let inv = kappa
            .try_inverse()
            .ok_or_else(|| Error::SingularSystem("kappa singular".into()))?;
        let n = self.ground_size();
        let cross = DMatrix::from_fn(loci.len(), n, |i, j| self.kernel[(loci[i], j)]);
        let kt = &self.kernel - cross.transpose() * inv * cross;
        // roundoff in the triple product breaks exact symmetry at ~1e-14
        Ok(0.5 * (&kt + kt.transpose()))
    }
}

/// Brute-force Janossy probability: particles at every locus and none else in I.
pub fn janossy_bruteforce(dpp: &DiscreteDpp, loci: &[usize], interval: &[usize]) -> f64 {
    dpp.enumerate_point_probs()
        .into_iter()
        .filter(|(subset, _)| {
            loci.iter().all(|l| subset.contains(l))
                && subset
                    .iter()
                    .all(|s| !interval.contains(s) || loci.contains(s))
        })
        .map(|(_, p)| p)
        .sum()
}

/// Brute-force probability of loci occupied plus exactly p extra points in I.
pub fn janossy_p_bruteforce(dpp: &DiscreteDpp, loci: &[usize], interval: &[usize], p: usize) -> f64 {
    dpp.enumerate_point_probs()
        .into_iter()
        .filter(|(subset, _)| {
            let extras = subset
                .iter()
                .filter(|s| interval.contains(s) && !loci.contains(s))
                .count();
            loci.iter().all(|l| subset.contains(l)) && extras == p
        })
        .map(|(_, p)| p)
        .sum()
}

/// Formula route for the Janossy probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JanossyRoute {
    /// det(I - K_I) times the determinant of the resolvent minor at the loci.
    Resolvent,
    /// The one-shot (k + |I|) block determinant.
    Block,
    /// det(kappa) times the gap determinant of the transformed kernel.
    Transformed,
}

pub fn janossy_formula(
    dpp: &DiscreteDpp,
    loci: &[usize],
    interval: &[usize],
    route: JanossyRoute,
) -> Result<f64> {
    let k = loci.len();
    let m = interval.len();
    let kappa = dpp.minor(loci, loci);
    let id_i = DMatrix::<f64>::identity(m, m);
    let k_i = dpp.minor(interval, interval);
    match route {
        JanossyRoute::Resolvent => {
            // for a rank-N projection on n sites, K_I acquires unit eigenvalues
            // whenever N + |I| > n; the resolvent route is then singular even
            // though the block and transformed routes stay finite
            let spectrum = sym_eigen(&k_i)?;
            if spectrum.first().map(|&l| l > 1.0 - 1e-10).unwrap_or(false) {
                return Err(Error::SingularSystem("I - K_I singular".into()));
            }
            let gap = (id_i.clone() - &k_i).determinant();
            let inv = (id_i - &k_i)
                .try_inverse()
                .ok_or_else(|| Error::SingularSystem("I - K_I singular".into()))?;
            let cross = dpp.minor(loci, interval);
            let res = &kappa + &cross * inv * cross.transpose();
            Ok(gap * res.determinant())
        }
        JanossyRoute::Block => {
            let mut blk = DMatrix::<f64>::zeros(k + m, k + m);
            for i in 0..k {
                for j in 0..k {
                    blk[(i, j)] = -kappa[(i, j)];
                }
            }
            let cross = dpp.minor(loci, interval);
            for i in 0..k {
                for j in 0..m {
                    blk[(i, k + j)] = -cross[(i, j)];
                    blk[(k + j, i)] = -cross[(i, j)];
                }
            }
            for i in 0..m {
                for j in 0..m {
                    blk[(k + i, k + j)] = (if i == j { 1.0 } else { 0.0 }) - k_i[(i, j)];
                }
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            Ok(sign * blk.determinant())
        }
        JanossyRoute::Transformed => {
            let kt = dpp.transformed_kernel(loci)?;
            let kt_i = DMatrix::from_fn(m, m, |i, j| kt[(interval[i], interval[j])]);
            let gap = (DMatrix::<f64>::identity(m, m) - kt_i).determinant();
            Ok(kappa.determinant() * gap)
        }
    }
}

/// E_p-style weight: prod(1 - mu) e_p(mu/(1-mu)) over a finite spectrum.
fn counting_weight(spectrum: &[f64], p: usize) -> f64 {
    let mut det = 1.0;
    let mut esp = vec![0.0f64; p + 1];
    esp[0] = 1.0;
    for &mu in spectrum {
        let mc = mu.min(1.0 - 1e-13);
        det *= 1.0 - mc;
        let r = mc / (1.0 - mc);
        for j in (1..=p).rev() {
            esp[j] += r * esp[j - 1];
        }
    }
    det * esp[p]
}

/// Janossy probability with exactly p extra particles, via the z-derivative of
/// det(I - z Ktilde_I) evaluated through the spectrum of Ktilde_I.
pub fn janossy_p_formula(dpp: &DiscreteDpp, loci: &[usize], interval: &[usize], p: usize) -> Result<f64> {
    let kt = dpp.transformed_kernel(loci)?;
    let m = interval.len();
    let kt_i = DMatrix::from_fn(m, m, |i, j| kt[(interval[i], interval[j])]);
    let spectrum = sym_eigen(&kt_i)?;
    let kappa = dpp.minor(loci, loci).determinant();
    Ok(kappa * counting_weight(&spectrum, p))
}

/// Conditional p-point correlation: (rho_(p+k)(points, loci)/rho_k(loci),
/// det[Ktilde(points)]) - the two sides of the conditioning identity.
pub fn conditional_correlation_check(
    dpp: &DiscreteDpp,
    loci: &[usize],
    points: &[usize],
) -> Result<(f64, f64)> {
    if points.iter().any(|p| loci.contains(p)) {
        return Err(Error::InvalidArgument("points must avoid the loci".into()));
    }
    let mut all: Vec<usize> = points.to_vec();
    all.extend_from_slice(loci);
    let lhs = dpp.correlation(&all) / dpp.correlation(loci);
    let kt = dpp.transformed_kernel(loci)?;
    let rhs = DMatrix::from_fn(points.len(), points.len(), |i, j| kt[(points[i], points[j])]).determinant();
    Ok((lhs, rhs))
}

/// Outcome of one identity check in the self-test suite.
#[derive(Debug, Clone)]
pub struct SelfTestLine {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Run the full identity suite over seeded random projections; returns one
/// line per identity family with the worst deviation observed.
pub fn selftest_suite(seeds: u64, base_seed: u64) -> Result<Vec<SelfTestLine>> {
    let mut worst_routes = 0.0f64;
    let mut worst_p = 0.0f64;
    let mut worst_cond = 0.0f64;
    let mut worst_proj = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut worst_norm = 0.0f64;
    for i in 0..seeds {
        let seed = base_seed.wrapping_add(i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCDEF);
        let n = rng.gen_range(5..=MAX_GROUND);
        let rank = rng.gen_range(2..n.min(7));
        let dpp = random_projection(n, rank, seed)?;
        // probabilities sum to one
        let total: f64 = dpp.enumerate_point_probs().into_iter().map(|(_, p)| p).sum();
        worst_norm = worst_norm.max((total - 1.0).abs());
        // loci and interval
        let k = rng.gen_range(1..=2.min(rank));
        let mut sites: Vec<usize> = (0..n).collect();
        for j in (1..n).rev() {
            let pick = rng.gen_range(0..=j);
            sites.swap(j, pick);
        }
        let loci: Vec<usize> = sites[..k].to_vec();
        let isize = rng.gen_range(2..=n - 1);
        let mut interval: Vec<usize> = sites[k..k + isize.min(n - k)].to_vec();
        if rng.gen_bool(0.5) {
            // exercised case: loci inside I
            interval.extend_from_slice(&loci);
        }
        interval.sort_unstable();
        let brute = janossy_bruteforce(&dpp, &loci, &interval);
        for route in [JanossyRoute::Resolvent, JanossyRoute::Block, JanossyRoute::Transformed] {
            match janossy_formula(&dpp, &loci, &interval, route) {
                Ok(v) => worst_routes = worst_routes.max((v - brute).abs()),
                Err(Error::SingularSystem(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        // exactly-p counts and their total
        let mut total_p = 0.0;
        for p in 0..=interval.len() {
            let b = janossy_p_bruteforce(&dpp, &loci, &interval, p);
            match janossy_p_formula(&dpp, &loci, &interval, p) {
                Ok(f) => worst_p = worst_p.max((f - b).abs()),
                Err(Error::SingularSystem(_)) => continue,
                Err(e) => return Err(e),
            }
            total_p += b;
        }
        worst_p = worst_p.max((total_p - dpp.correlation(&loci)).abs());
        // conditional correlations at up to two free points
        let free: Vec<usize> = sites[k + isize.min(n - k)..].to_vec();
        if !free.is_empty() {
            let pts = &free[..free.len().min(2)];
            if let Ok((lhs, rhs)) = conditional_correlation_check(&dpp, &loci, pts) {
                worst_cond = worst_cond.max((lhs - rhs).abs());
            }
        }
        // projectivity and trace of the transformed kernel
        if let Ok(kt) = dpp.transformed_kernel(&loci) {
            let sq = &kt * &kt;
            worst_proj = worst_proj.max((sq - &kt).abs().max());
            worst_trace = worst_trace.max((kt.trace() - (rank - k) as f64).abs());
        }
    }
    let line = |name: &str, worst: f64, tol: f64| SelfTestLine {
        name: name.into(),
        worst,
        tolerance: tol,
        pass: worst <= tol,
    };
    Ok(vec![
        line("configuration probabilities normalize", worst_norm, 1e-10),
        line("janossy routes vs enumeration", worst_routes, 1e-10),
        line("exactly-p counts vs enumeration", worst_p, 1e-10),
        line("conditional correlations vs transformed kernel", worst_cond, 1e-10),
        line("transformed kernel projectivity", worst_proj, 1e-9),
        line("transformed kernel trace N-k", worst_trace, 1e-9),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_invariants() {
        let dpp = random_projection(8, 4, 7).unwrap();
        let k = &dpp.kernel;
        assert!((k.trace() - 4.0).abs() < 1e-12);
        let sq = k * k;
        assert!((sq - k).abs().max() < 1e-10, "not projective");
        let ev = sym_eigen(k).unwrap();
        for v in ev {
            assert!(v.abs() < 1e-10 || (v - 1.0).abs() < 1e-10, "eigenvalue {v}");
        }
        assert!(random_projection(13, 4, 1).is_err());
        assert!(random_projection(8, 8, 1).is_err());
    }

    #[test]
    fn identity_kernel_limit() {
        // N = n - 1 projection behaves; the full-set probability check needs
        // the trivial K = I case, built directly
        let dpp = DiscreteDpp { kernel: DMatrix::identity(5, 5), rank: 5 };
        let probs = dpp.enumerate_point_probs();
        assert_eq!(probs.len(), 1);
        assert!((probs[0].1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_site_hand_example() {
        // K = [[1/2,1/2],[1/2,1/2]], N = 1: P({0}) = P({1}) = 1/2
        let dpp = DiscreteDpp {
            kernel: DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]),
            rank: 1,
        };
        let probs = dpp.enumerate_point_probs();
        for (_, p) in &probs {
            assert!((p - 0.5).abs() < 1e-14);
        }
        let total: f64 = probs.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-14);
        // loci = {0}, I = {0}: J = 1/2 via all routes
        let brute = janossy_bruteforce(&dpp, &[0], &[0]);
        assert!((brute - 0.5).abs() < 1e-14);
        for route in [JanossyRoute::Resolvent, JanossyRoute::Block, JanossyRoute::Transformed] {
            let v = janossy_formula(&dpp, &[0], &[0], route).unwrap();
            assert!((v - brute).abs() < 1e-12, "{route:?}");
        }
    }

    #[test]
    fn empty_loci_reduces_to_gap_probability() {
        let dpp = random_projection(8, 4, 3).unwrap();
        let interval = [1usize, 3, 4, 6];
        let brute = janossy_bruteforce(&dpp, &[], &interval);
        let ki = DMatrix::from_fn(4, 4, |i, j| dpp.kernel[(interval[i], interval[j])]);
        let gap = (DMatrix::<f64>::identity(4, 4) - ki).determinant();
        assert!((brute - gap).abs() < 1e-12);
    }

    #[test]
    fn routes_agree_on_random_instance() {
        let dpp = random_projection(8, 4, 11).unwrap();
        let loci = [2usize, 5];
        let interval = [0usize, 2, 5];
        let brute = janossy_bruteforce(&dpp, &loci, &interval);
        for route in [JanossyRoute::Resolvent, JanossyRoute::Block, JanossyRoute::Transformed] {
            let v = janossy_formula(&dpp, &loci, &interval, route).unwrap();
            assert!((v - brute).abs() < 1e-10, "{route:?}: {v} vs {brute}");
        }
        // N + |I| > n forces a unit eigenvalue of K_I; the resolvent route
        // reports it while the other two remain exact
        let wide = [0usize, 2, 3, 5, 7];
        assert!(matches!(
            janossy_formula(&dpp, &loci, &wide, JanossyRoute::Resolvent),
            Err(Error::SingularSystem(_))
        ));
        let brute = janossy_bruteforce(&dpp, &loci, &wide);
        for route in [JanossyRoute::Block, JanossyRoute::Transformed] {
            let v = janossy_formula(&dpp, &loci, &wide, route).unwrap();
            assert!((v - brute).abs() < 1e-10, "wide {route:?}: {v} vs {brute}");
        }
        // lifted case: loci outside I
        let interval_out = [0usize, 3, 7];
        let brute = janossy_bruteforce(&dpp, &loci, &interval_out);
        for route in [JanossyRoute::Resolvent, JanossyRoute::Block, JanossyRoute::Transformed] {
            let v = janossy_formula(&dpp, &loci, &interval_out, route).unwrap();
            assert!((v - brute).abs() < 1e-10, "lifted {route:?}: {v} vs {brute}");
        }
    }

    #[test]
    fn exactly_p_identities() {
        let dpp = random_projection(9, 4, 17).unwrap();
        let loci = [1usize];
        let interval = [0usize, 1, 4, 6, 8];
        let mut total = 0.0;
        for p in 0..=interval.len() {
            let b = janossy_p_bruteforce(&dpp, &loci, &interval, p);
            let f = janossy_p_formula(&dpp, &loci, &interval, p).unwrap();
            assert!((b - f).abs() < 1e-10, "p={p}: {b} vs {f}");
            total += b;
            // conditional form is the plain ratio
            let cond = f / dpp.correlation(&loci);
            assert!((cond * dpp.correlation(&loci) - f).abs() < 1e-14);
        }
        // beyond capacity
        let over = janossy_p_bruteforce(&dpp, &loci, &interval, interval.len() + 1);
        assert_eq!(over, 0.0);
        // sum over p recovers rho_k
        assert!((total - dpp.correlation(&loci)).abs() < 1e-10);
    }

    #[test]
    fn conditional_correlation_small_cases() {
        let dpp = random_projection(7, 3, 23).unwrap();
        // p=1, k=1: the explicit 2x2 ratio
        let (lhs, rhs) = conditional_correlation_check(&dpp, &[2], &[5]).unwrap();
        let k = &dpp.kernel;
        let explicit = (k[(5, 5)] * k[(2, 2)] - k[(5, 2)] * k[(2, 5)]) / k[(2, 2)];
        assert!((lhs - explicit).abs() < 1e-12);
        assert!((lhs - rhs).abs() < 1e-12);
        // random p=2 instance
        let (lhs, rhs) = conditional_correlation_check(&dpp, &[2], &[0, 4]).unwrap();
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn suite_runs_clean() {
        let lines = selftest_suite(25, 1000).unwrap();
        for l in &lines {
            assert!(l.pass, "{}: worst {} > {}", l.name, l.worst, l.tolerance);
        }
    }
}
