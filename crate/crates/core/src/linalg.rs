//! Symmetric eigenvalue machinery: Householder reduction to tridiagonal form
//! and implicit-shift QL on the tridiagonal, eigenvalues only. The tridiagonal
//! path is shared with the matrix-ensemble sampler, where it is the hot loop.

use crate::error::{Error, Result};

/// Reduce a symmetric matrix (flat row-major, n x n) to tridiagonal form in
/// place; returns (diagonal, subdiagonal) with subdiagonal[0] unused.
pub(crate) fn householder_tridiag(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let idx = |i: usize, j: usize| i * n + j;
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[idx(i, k)].abs();
            }
            if scale == 0.0 {
                e[i] = a[idx(i, l)];
            } else {
                for k in 0..=l {
                    a[idx(i, k)] /= scale;
                    h += a[idx(i, k)] * a[idx(i, k)];
                }
                let f = a[idx(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[idx(i, l)] = f - g;
                let mut ff = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[idx(j, k)] * a[idx(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += a[idx(k, j)] * a[idx(i, k)];
                    }
                    e[j] = g / h;
                    ff += e[j] * a[idx(i, j)];
                }
                let hh = ff / (h + h);
                for j in 0..=l {
                    let f = a[idx(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[idx(j, k)] -= f * e[k] + g * a[idx(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[idx(i, l)];
        }
        d[i] = h;
    }
    for i in 0..n {
        d[i] = a[idx(i, i)];
    }
    (d, e)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix; `d` is the diagonal,
/// `e` the subdiagonal with e[0] unused. Eigenvalues land in `d`, unsorted.
pub(crate) fn tql_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    // pre-deflate noise-level couplings; they perturb eigenvalues by well
    // under the 1e-12 * norm contract and would otherwise stall the sweeps
    // in blocks of near-identical denormal-scale values
    let anorm = d
        .iter()
        .chain(e.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for v in e.iter_mut() {
        if v.abs() < 1e-15 * anorm {
            *v = 0.0;
        }
    }
    for l in 0..n {
        let mut iter = 0;
        let mut last_m = usize::MAX;
        'restart: loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                // the absolute floor keeps denormal-range blocks from spinning
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() < 1e-290 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            // the counter is per deflated eigenvalue: a large near-degenerate
            // block can need O(block) sweeps for the same l as m walks down
            if m != last_m {
                iter = 0;
                last_m = m;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::EigenNoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    continue 'restart;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + 2.0 * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues of a symmetric tridiagonal matrix given by diagonal and
/// off-diagonal (length n-1), sorted descending.
pub fn tridiag_eigenvalues(diag: &[f64], offdiag: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0f64; n];
    for (i, &v) in offdiag.iter().enumerate() {
        e[i + 1] = v;
    }
    tql_eigenvalues(&mut d, &mut e)?;
    d.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(d)
}

/// All eigenvalues of a dense symmetric matrix, sorted descending.
/// The input must be symmetric to 1e-13 relative to its scale.
pub fn sym_eigen(a: &nalgebra::DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidArgument("sym_eigen needs a square matrix".into()));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-13 * scale {
                return Err(Error::InvalidArgument(format!(
                    "matrix not symmetric at ({i},{j}): {} vs {}",
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }
    let mut flat: Vec<f64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            flat.push(a[(i, j)]);
        }
    }
    let (mut d, mut e) = householder_tridiag(&mut flat, n);
    tql_eigenvalues(&mut d, &mut e)?;
    d.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(d)
}
