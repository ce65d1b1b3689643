//! Matrices whose entries are Laurent polynomials in the spectral parameter.

use std::collections::BTreeMap;
use std::fmt;

use crate::linalg::{fro, CMatrix, C64, ZERO};

/// `sum_d coeffs[d] * lambda^d`, all coefficients square of the same size.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentMatrix {
    dim: usize,
    coeffs: BTreeMap<i32, CMatrix>,
}

impl LaurentMatrix {
    pub fn zero(dim: usize) -> Self {
        LaurentMatrix {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn monomial(deg: i32, m: CMatrix) -> Self {
        let dim = m.nrows();
        let mut out = LaurentMatrix::zero(dim);
        out.coeffs.insert(deg, m);
        out
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (i32, CMatrix)>) -> Self {
        let mut out = LaurentMatrix::zero(dim);
        for (d, m) in terms {
            out.add_term(d, &m);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_term(&mut self, deg: i32, m: &CMatrix) {
        let e = self
            .coeffs
            .entry(deg)
            .or_insert_with(|| CMatrix::zeros(m.nrows(), m.ncols()));
        *e += m;
    }

    /// Coefficient of `lambda^deg` (zero matrix when absent).
    pub fn coeff(&self, deg: i32) -> CMatrix {
        self.coeffs
            .get(&deg)
            .cloned()
            .unwrap_or_else(|| CMatrix::zeros(self.dim, self.dim))
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &CMatrix)> {
        self.coeffs.iter().map(|(d, m)| (*d, m))
    }

    /// Degrees carrying a coefficient with entries above `tol`.
    pub fn support(&self, tol: f64) -> Vec<i32> {
        self.coeffs
            .iter()
            .filter(|(_, m)| m.iter().any(|z| z.norm() > tol))
            .map(|(d, _)| *d)
            .collect()
    }

    /// Zero out entries with modulus at most `tol` and drop empty degrees.
    pub fn chop(&self, tol: f64) -> Self {
        let mut out = LaurentMatrix::zero(self.dim);
        for (d, m) in &self.coeffs {
            let cm = m.map(|z| {
                let re = if z.re.abs() <= tol { 0.0 } else { z.re };
                let im = if z.im.abs() <= tol { 0.0 } else { z.im };
                C64::new(re, im)
            });
            if cm.iter().any(|z| *z != ZERO) {
                out.coeffs.insert(*d, cm);
            }
        }
        out
    }

    pub fn eval(&self, lambda: C64) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (d, m) in &self.coeffs {
            out += m * lambda.powi(*d);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (d, m) in &other.coeffs {
            out.add_term(*d, m);
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        LaurentMatrix {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|(d, m)| (*d, m * s)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = LaurentMatrix::zero(self.dim);
        for (da, a) in &self.coeffs {
            for (db, b) in &other.coeffs {
                out.add_term(da + db, &(a * b));
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// Largest coefficient entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .values()
            .flat_map(|m| m.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }

    /// Trace as a scalar Laurent polynomial: `(degree, value)` pairs.
    pub fn trace(&self) -> Vec<(i32, C64)> {
        self.coeffs.iter().map(|(d, m)| (*d, m.trace())).collect()
    }

    /// Conjugate every coefficient by a constant invertible matrix `p`: `p^{-1} A p`.
    pub fn conjugate_by(&self, p: &CMatrix, p_inv: &CMatrix) -> Self {
        LaurentMatrix {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .map(|(d, m)| (*d, p_inv * m * p))
                .collect(),
        }
    }

    /// Recover Laurent coefficients of degrees `-half..half` from samples on the
    /// unit circle. Returns the polynomial and the largest coefficient seen
    /// outside `expected` (aliasing/structure defect).
    pub fn from_unit_circle_samples<F>(dim: usize, half: i32, expected: (i32, i32), f: F) -> (Self, f64)
    where
        F: Fn(C64) -> CMatrix,
    {
        let n = (2 * half) as usize;
        let samples: Vec<(C64, CMatrix)> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
                let l = C64::from_polar(1.0, t);
                (l, f(l))
            })
            .collect();
        let mut out = LaurentMatrix::zero(dim);
        let mut stray = 0.0f64;
        for d in -half..half {
            let mut acc = CMatrix::zeros(dim, dim);
            for (l, m) in &samples {
                acc += m * l.powi(-d);
            }
            acc /= C64::new(n as f64, 0.0);
            if d >= expected.0 && d <= expected.1 {
                out.coeffs.insert(d, acc);
            } else {
                stray = stray.max(acc.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        (out, stray)
    }

    /// Distance to another Laurent matrix (max over degrees of Frobenius norm).
    pub fn distance(&self, other: &Self) -> f64 {
        let diff = self.sub(other);
        diff.coeffs.values().map(fro).fold(0.0, f64::max)
    }
}

impl fmt::Display for LaurentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (d, m) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "λ^{d}·[")?;
            for i in 0..m.nrows() {
                if i > 0 {
                    write!(f, "; ")?;
                }
                for j in 0..m.ncols() {
                    if j > 0 {
                        write!(f, ", ")?;
                    }
                    let z = m[(i, j)];
                    write!(f, "{}{:+}i", z.re, z.im)?;
                }
            }
            write!(f, "]")?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ONE};

    #[test]
    fn recovers_coefficients_from_samples() {
        let a = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let b = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), ZERO, c(0.0, 2.0), ZERO]);
        let exact = LaurentMatrix::from_terms(2, [(-1, a), (0, b)]);
        let (got, stray) = LaurentMatrix::from_unit_circle_samples(2, 4, (-1, 0), |l| exact.eval(l));
        assert!(stray < 1e-14);
        assert!(got.distance(&exact) < 1e-14);
    }

    #[test]
    fn product_degrees_add() {
        let m = CMatrix::identity(2, 2);
        let p = LaurentMatrix::monomial(-1, m.clone()).mul(&LaurentMatrix::monomial(2, m));
        assert_eq!(p.support(0.0), vec![1]);
    }
}
