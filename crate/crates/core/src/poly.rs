//! Small dense polynomials with complex coefficients, ascending degree order.

use num_complex::Complex64;

pub type C64 = Complex64;

/// Polynomial stored as ascending coefficients; the empty list is the zero polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn constant(c: C64) -> Self {
        Poly::new(vec![c])
    }

    /// x - r
    pub fn linear(r: C64) -> Self {
        Poly::new(vec![-r, C64::new(1.0, 0.0)])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, j: usize) -> C64 {
        self.coeffs.get(j).copied().unwrap_or_default()
    }

    fn trim(&mut self) {
        while let Some(c) = self.coeffs.last() {
            if c.norm() == 0.0 && self.coeffs.len() > 1 {
                self.coeffs.pop();
            } else {
                break;
            }
        }
        if self.coeffs.len() == 1 && self.coeffs[0].norm() == 0.0 {
            self.coeffs.clear();
        }
    }

    pub fn eval(&self, x: C64) -> C64 {
        let mut acc = C64::default();
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_real(&self, x: f64) -> C64 {
        self.eval(C64::new(x, 0.0))
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|j| self.coeff(j) + other.coeff(j)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|j| self.coeff(j) - other.coeff(j)).collect())
    }

    pub fn scale(&self, c: C64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![C64::default(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Coefficients of p(c + h) in powers of h (Taylor recentring, Ruffini–Horner).
    pub fn shift(&self, c: C64) -> Poly {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for k in 0..n {
            for i in (k..n.saturating_sub(1)).rev() {
                let next = a[i + 1];
                a[i] += c * next;
            }
        }
        Poly { coeffs: a }
    }
}
