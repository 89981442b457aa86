//! Monte Carlo sampling of extremal eigenvalues and singular values of
//! Gaussian matrix ensembles, with edge scaling and histogram pipelines.
//!
//! The Hermitian ensemble (density ~ exp(-Tr H^2), semicircle edge at
//! sqrt(2N)) is sampled through its exact symmetric tridiagonal reduction;
//! the complex rectangular ensemble through its exact bidiagonal reduction.
//! Both reduce each draw to an O(N^2) tridiagonal eigenvalue problem.

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, tridiag_eigenvalues};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::gamma::gamma_ur;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    GueEdge,
    WishartHardEdge { nu: u32 },
}

/// Scaled (first, second) extremal pairs from one seeded run.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub ensemble: Ensemble,
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub pairs: Vec<(f64, f64)>,
}

impl SampleBatch {
    /// CSV export: header line, then `first,second` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "first,second")?;
        for (a, b) in &self.pairs {
            writeln!(w, "{a:.17e},{b:.17e}")?;
        }
        Ok(())
    }
}

const CHUNK: usize = 512;

fn chunked_sample<F>(n: usize, count: usize, seed: u64, per_draw: F) -> Vec<(f64, f64)>
where
    F: Fn(&mut ChaCha8Rng) -> (f64, f64) + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let _ = n;
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64 + 1);
            let take = CHUNK.min(count - c * CHUNK);
            let mut out = Vec::with_capacity(take);
            for _ in 0..take {
                out.push(per_draw(&mut rng));
            }
            out
        })
        .collect()
}

/// Two largest eigenvalues of the Hermitian ensemble, scaled
/// t = sqrt(2) N^(1/6) (x - sqrt(2N)).
pub fn sample_gue_edge(n: usize, count: usize, seed: u64) -> Result<SampleBatch> {
    if n < 16 {
        return Err(Error::InvalidArgument(format!("matrix rank {n} < 16")));
    }
    let center = (2.0 * n as f64).sqrt();
    let scale = 2.0f64.sqrt() * (n as f64).powf(1.0 / 6.0);
    let chis: Vec<ChiSquared<f64>> = (1..n)
        .map(|i| ChiSquared::new(2.0 * (n - i) as f64).expect("chi dof"))
        .collect();
    let pairs = chunked_sample(n, count, seed, |rng| {
        // diagonal N(0, 1/2); sub-diagonal chi_(2(N-i))/2
        let diag: Vec<f64> = (0..n)
            .map(|_| {
                let g: f64 = rng.sample(StandardNormal);
                g * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        let off: Vec<f64> = chis.iter().map(|c| 0.5 * c.sample(rng).sqrt()).collect();
        let ev = tridiag_eigenvalues(&diag, &off).expect("tridiagonal eigensolve");
        (scale * (ev[0] - center), scale * (ev[1] - center))
    });
    Ok(SampleBatch { ensemble: Ensemble::GueEdge, n, count, seed, pairs })
}

/// Two smallest singular values of an N x (N+nu) complex Gaussian matrix with
/// entry variance E|W|^2 = 2, scaled by sqrt(2N). With this variance the
/// scaled variable squares to the hard-edge kernel variable.
pub fn sample_wishart_hard_edge(n: usize, nu: u32, count: usize, seed: u64) -> Result<SampleBatch> {
    if n < 16 {
        return Err(Error::InvalidArgument(format!("matrix rank {n} < 16")));
    }
    let scale = (2.0 * n as f64).sqrt();
    let m = n + nu as usize;
    // bidiagonal model: diag chi_(2(m-i+1)), super chi_(2(n-i)), i = 1..n
    let diag_chis: Vec<ChiSquared<f64>> = (1..=n)
        .map(|i| ChiSquared::new(2.0 * (m - i + 1) as f64).expect("chi dof"))
        .collect();
    let off_chis: Vec<ChiSquared<f64>> = (1..n)
        .map(|i| ChiSquared::new(2.0 * (n - i) as f64).expect("chi dof"))
        .collect();
    let pairs = chunked_sample(n, count, seed, |rng| {
        let d: Vec<f64> = diag_chis.iter().map(|c| c.sample(rng).sqrt()).collect();
        let e: Vec<f64> = off_chis.iter().map(|c| c.sample(rng).sqrt()).collect();
        // T = B B^t is symmetric tridiagonal with eigenvalues sigma^2
        let mut t_diag = vec![0.0f64; n];
        let mut t_off = vec![0.0f64; n - 1];
        for i in 0..n {
            let e_i = if i < n - 1 { e[i] } else { 0.0 };
            t_diag[i] = d[i] * d[i] + e_i * e_i;
            if i < n - 1 {
                t_off[i] = e[i] * d[i + 1];
            }
        }
        let ev = tridiag_eigenvalues(&t_diag, &t_off).expect("tridiagonal eigensolve");
        let smallest = ev[n - 1].max(0.0).sqrt();
        let second = ev[n - 2].max(0.0).sqrt();
        (scale * smallest, scale * second)
    });
    Ok(SampleBatch {
        ensemble: Ensemble::WishartHardEdge { nu },
        n,
        count,
        seed,
        pairs,
    })
}

/// Largest eigenvalue via the dense Hermitian path (slow reference used to
/// validate the tridiagonal model): the complex matrix embeds into the real
/// symmetric [[X, -Y], [Y, X]] with doubled spectrum.
pub fn gue_edge_dense_reference(n: usize, count: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 16 {
        return Err(Error::InvalidArgument(format!("matrix rank {n} < 16")));
    }
    let center = (2.0 * n as f64).sqrt();
    let scale = 2.0f64.sqrt() * (n as f64).powf(1.0 / 6.0);
    let firsts: Vec<(f64, f64)> = chunked_sample(n, count, seed, |rng| {
        let mut x = DMatrix::<f64>::zeros(n, n);
        let mut y = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let g: f64 = rng.sample(StandardNormal);
            x[(i, i)] = g * std::f64::consts::FRAC_1_SQRT_2;
            for j in (i + 1)..n {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                x[(i, j)] = 0.5 * re;
                x[(j, i)] = 0.5 * re;
                y[(i, j)] = 0.5 * im;
                y[(j, i)] = -0.5 * im;
            }
        }
        let mut emb = DMatrix::<f64>::zeros(2 * n, 2 * n);
        emb.view_mut((0, 0), (n, n)).copy_from(&x);
        emb.view_mut((n, n), (n, n)).copy_from(&x);
        emb.view_mut((0, n), (n, n)).copy_from(&(-&y));
        emb.view_mut((n, 0), (n, n)).copy_from(&y);
        let ev = sym_eigen(&emb).expect("dense eigensolve");
        (scale * (ev[0] - center), 0.0)
    });
    Ok(firsts.into_iter().map(|(a, _)| a).collect())
}

/// Rectangular bin layout for pair histograms.
#[derive(Debug, Clone)]
pub struct BinSpec {
    pub t_edges: Vec<f64>,
    pub s_edges: Vec<f64>,
}

impl BinSpec {
    pub fn uniform(t_lo: f64, t_hi: f64, nt: usize, s_lo: f64, s_hi: f64, ns: usize) -> Result<BinSpec> {
        if nt == 0 || ns == 0 || t_lo >= t_hi || s_lo >= s_hi {
            return Err(Error::InvalidArgument("degenerate bin layout".into()));
        }
        let edges = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
            (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
        };
        Ok(BinSpec { t_edges: edges(t_lo, t_hi, nt), s_edges: edges(s_lo, s_hi, ns) })
    }
}

/// Normalized 2-D histogram of the (first, second) pairs.
#[derive(Debug, Clone)]
pub struct Histogram2d {
    pub bins: BinSpec,
    pub counts: Vec<Vec<u64>>,
    /// count inside bins / total count / bin area
    pub density: Vec<Vec<f64>>,
    pub outside: u64,
}

pub fn histogram2d(batch: &SampleBatch, bins: &BinSpec) -> Result<Histogram2d> {
    if batch.count < 10_000 {
        return Err(Error::InvalidArgument("histograms need at least 1e4 samples".into()));
    }
    let nt = bins.t_edges.len() - 1;
    let ns = bins.s_edges.len() - 1;
    let mut counts = vec![vec![0u64; ns]; nt];
    let mut outside = 0u64;
    let locate = |edges: &[f64], x: f64| -> Option<usize> {
        if x < edges[0] || x >= *edges.last().unwrap() {
            return None;
        }
        let mut lo = 0;
        let mut hi = edges.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < edges[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(lo)
    };
    for &(t, s) in &batch.pairs {
        match (locate(&bins.t_edges, t), locate(&bins.s_edges, s)) {
            (Some(i), Some(j)) => counts[i][j] += 1,
            _ => outside += 1,
        }
    }
    let total = batch.pairs.len() as f64;
    let density = counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let dt = bins.t_edges[i + 1] - bins.t_edges[i];
            row.iter()
                .enumerate()
                .map(|(j, &c)| {
                    let ds = bins.s_edges[j + 1] - bins.s_edges[j];
                    c as f64 / (total * dt * ds)
                })
                .collect()
        })
        .collect();
    Ok(Histogram2d { bins: bins.clone(), counts, density, outside })
}

/// Pearson statistic of a histogram against per-bin expected probabilities.
#[derive(Debug, Clone, Copy)]
pub struct Chi2Result {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Chi-squared comparison against analytic bin probabilities; cells with
/// expected count below 5 (including the outside remainder) are pooled.
pub fn chi2_compare(hist: &Histogram2d, expected_probs: &[Vec<f64>], total: usize) -> Result<Chi2Result> {
    let nt = hist.counts.len();
    if expected_probs.len() != nt || expected_probs.iter().any(|r| r.len() != hist.counts[0].len()) {
        return Err(Error::InvalidArgument("expected-probability shape mismatch".into()));
    }
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut covered = 0.0;
    for (row_c, row_e) in hist.counts.iter().zip(expected_probs.iter()) {
        for (&c, &pe) in row_c.iter().zip(row_e.iter()) {
            covered += pe;
            cells.push((c as f64, n * pe));
        }
    }
    let outside_exp = n * (1.0 - covered).max(0.0);
    cells.push((hist.outside as f64, outside_exp));
    let mut stat = 0.0;
    let mut kept = 0usize;
    let mut pool_obs = 0.0;
    let mut pool_exp = 0.0;
    for (obs, exp) in cells {
        if exp < 5.0 {
            pool_obs += obs;
            pool_exp += exp;
        } else {
            stat += (obs - exp).powi(2) / exp;
            kept += 1;
        }
    }
    if pool_exp >= 5.0 {
        stat += (pool_obs - pool_exp).powi(2) / pool_exp;
        kept += 1;
    }
    if kept < 2 {
        return Err(Error::InvalidArgument("all bins pooled away; widen the layout".into()));
    }
    let dof = kept - 1;
    let p_value = gamma_ur(dof as f64 / 2.0, stat / 2.0);
    Ok(Chi2Result { statistic: stat, dof, p_value })
}

/// Two-sample Kolmogorov-Smirnov p-value (asymptotic).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    xb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let lambda = d * (na * nb / (na + nb)).sqrt();
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        p += if k % 2 == 1 { term } else { -term };
    }
    p.clamp(0.0, 1.0)
}
