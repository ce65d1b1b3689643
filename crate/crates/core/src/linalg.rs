//! Dense complex linear algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Frobenius norm.
pub fn fro(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with a fixed degree-13 Padé approximant.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let theta13 = 5.371920351148152;
    let norm = one_norm(a);
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a.map(|z| z / 2f64.powi(s));
    let id = CMatrix::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let inner_u = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = &scaled * (inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is invertible for scaled input");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Unitary factor of the polar decomposition (closest unitary in Frobenius norm).
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    u * vt
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Numerical rank: singular values above `tol` times the largest.
pub fn rank(m: &CMatrix, tol: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * top).count()
}

/// Orthonormal basis (columns) of the null space of `m`.
pub fn null_space(m: &CMatrix, tol: f64) -> CMatrix {
    let ncols = m.ncols();
    if m.nrows() == 0 {
        return CMatrix::identity(ncols, ncols);
    }
    // pad to a square system so that the SVD returns a full V
    let rows = m.nrows().max(ncols);
    let mut padded = CMatrix::zeros(rows, ncols);
    padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("svd v_t");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = tol * top.max(1.0);
    let cols: Vec<CVector> = (0..ncols)
        .filter(|&i| svd.singular_values[i] <= cut)
        .map(|i| vt.row(i).adjoint().into_owned())
        .collect();
    if cols.is_empty() {
        CMatrix::zeros(ncols, 0)
    } else {
        CMatrix::from_columns(&cols)
    }
}

/// Least-squares solve via SVD; returns solution and residual norm.
pub fn lstsq(a: &CMatrix, b: &CMatrix) -> (CMatrix, f64) {
    let svd = a.clone().svd(true, true);
    let x = svd.solve(b, 1e-14).expect("svd solve");
    let res = fro(&(a * &x - b));
    (x, res)
}

/// Real null space via SVD.
pub fn real_null_space(m: &RMatrix, tol: f64) -> RMatrix {
    let ncols = m.ncols();
    if m.nrows() == 0 {
        return RMatrix::identity(ncols, ncols);
    }
    let rows = m.nrows().max(ncols);
    let mut padded = RMatrix::zeros(rows, ncols);
    padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("svd v_t");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = tol * top.max(1.0);
    let cols: Vec<DVector<f64>> = (0..ncols)
        .filter(|&i| svd.singular_values[i] <= cut)
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        RMatrix::zeros(ncols, 0)
    } else {
        RMatrix::from_columns(&cols)
    }
}

/// Hermitian part check: `max |m - m*|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    fro(&(m - m.adjoint()))
}

/// Orthonormalize columns of `basis` with respect to the Hermitian form `gram`
/// (given in the same coordinates). Modified Gram-Schmidt.
pub fn orthonormalize(basis: &CMatrix, gram: &CMatrix) -> CMatrix {
    let mut out = basis.clone();
    for j in 0..out.ncols() {
        for i in 0..j {
            let qi = out.column(i).into_owned();
            let vj = out.column(j).into_owned();
            let proj = (qi.adjoint() * gram * &vj)[(0, 0)];
            out.set_column(j, &(vj - qi * proj));
        }
        let vj = out.column(j).into_owned();
        let nrm = (vj.adjoint() * gram * &vj)[(0, 0)].re.sqrt();
        out.set_column(j, &(vj / C64::new(nrm, 0.0)));
    }
    out
}

/// Complex polynomial with ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<C64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map(|z| z.norm() == 0.0).unwrap_or(false) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        Poly { coeffs }
    }

    pub fn from_real(c: &[f64]) -> Self {
        Poly::new(c.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn constant(v: C64) -> Self {
        Poly::new(vec![v])
    }

    /// Monic product of linear factors.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut p = Poly::constant(ONE);
        for &r in roots {
            p = p.mul(&Poly::new(vec![-r, ONE]));
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].norm() == 0.0
    }

    pub fn leading(&self) -> C64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &a| acc * x + a)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::constant(ZERO);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &a)| a * k as f64)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![ZERO; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            out[i] += a;
        }
        for (i, &b) in other.coeffs.iter().enumerate() {
            out[i] += b;
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&a| a * s).collect())
    }

    /// Coefficients conjugated.
    pub fn conj(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|a| a.conj()).collect())
    }

    /// Roots by companion-matrix eigenvalues, polished by Newton steps.
    pub fn roots(&self) -> Vec<C64> {
        let d = self.degree();
        if d == 0 {
            return vec![];
        }
        // exact zero roots first: the companion matrix of w^m is nilpotent
        let zeros = self.coeffs.iter().take_while(|c| **c == ZERO).count().min(d);
        let mut out = vec![ZERO; zeros];
        if zeros == d {
            return out;
        }
        let red = Poly::new(self.coeffs[zeros..].to_vec());
        let m = red.degree();
        let lead = red.leading();
        let mut comp = CMatrix::zeros(m, m);
        for i in 1..m {
            comp[(i, i - 1)] = ONE;
        }
        for i in 0..m {
            comp[(i, m - 1)] = -red.coeffs[i] / lead;
        }
        let eig: Vec<C64> = match nalgebra::Schur::try_new(comp, f64::EPSILON, 10_000) {
            Some(s) => s.eigenvalues().expect("complex Schur form is triangular").iter().copied().collect(),
            None => red.aberth(),
        };
        let dp = red.derivative();
        out.extend(eig.iter().map(|&r0| {
            let mut r = r0;
            for _ in 0..3 {
                let f = red.eval(r);
                let fp = dp.eval(r);
                if fp.norm() < 1e-8 * (1.0 + f.norm()) {
                    break;
                }
                let step = f / fp;
                if step.norm() > 1e-3 * (1.0 + r.norm()) {
                    break;
                }
                r -= step;
            }
            r
        }));
        out
    }

    /// Simultaneous Aberth–Ehrlich iteration (fallback root finder).
    fn aberth(&self) -> Vec<C64> {
        let d = self.degree();
        let lead = self.leading();
        let radius = 1.0 + self.coeffs[..d].iter().map(|c| (c / lead).norm()).fold(0.0, f64::max);
        let mut z: Vec<C64> = (0..d).map(|k| C64::from_polar(radius, 0.4 + std::f64::consts::TAU * k as f64 / d as f64)).collect();
        let dp = self.derivative();
        for _ in 0..500 {
            let mut moved = 0.0f64;
            for k in 0..d {
                let ratio = self.eval(z[k]) / dp.eval(z[k]);
                let repulse: C64 = (0..d).filter(|j| *j != k).map(|j| ONE / (z[k] - z[j])).sum();
                let w = ratio / (ONE - ratio * repulse);
                if w.is_finite() {
                    z[k] -= w;
                    moved = moved.max(w.norm());
                }
            }
            if moved < 1e-15 {
                break;
            }
        }
        z
    }
}

/// Group nearly-equal values into clusters: `(mean value, multiplicity)`.
pub fn cluster(values: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize, C64)> = Vec::new();
    for &v in values {
        if let Some(slot) = out
            .iter_mut()
            .find(|(m, _, _)| (*m - v).norm() <= tol * (1.0 + v.norm()))
        {
            slot.1 += 1;
            slot.2 += v;
            slot.0 = slot.2 / slot.1 as f64;
        } else {
            out.push((v, 1, v));
        }
    }
    out.into_iter().map(|(m, k, _)| (m, k)).collect()
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_matches_taylor_series() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.3, 0.1), c(-1.2, 0.0), c(0.5, 2.0), c(-0.7, 0.4)],
        );
        let mut term = CMatrix::identity(2, 2);
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * &a / C64::new(k as f64, 0.0);
            sum += &term;
        }
        assert!(fro(&(expm(&a) - sum)) < 1e-13);
    }

    #[test]
    fn expm_of_large_skew_matrix_is_unitary() {
        let a = CMatrix::from_row_slice(2, 2, &[ZERO, c(40.0, 3.0), c(-40.0, 3.0), ZERO]);
        let e = expm(&a);
        let defect = fro(&(e.adjoint() * &e - CMatrix::identity(2, 2)));
        assert!(defect < 1e-10, "{defect}");
    }

    #[test]
    fn roots_of_product_are_recovered() {
        let r = [c(1.0, 0.0), c(-2.0, 0.5), c(0.0, 3.0)];
        let p = Poly::from_roots(&r);
        let mut got = p.roots();
        got.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((got[0] - r[1]).norm() < 1e-12);
        assert!((got[1] - r[2]).norm() < 1e-12);
        assert!((got[2] - r[0]).norm() < 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn null_space_dimension() {
        let m = CMatrix::from_row_slice(1, 3, &[ONE, ONE, ZERO]);
        let n = null_space(&m, 1e-12);
        assert_eq!(n.ncols(), 2);
        assert!(fro(&(m * n)) < 1e-14);
    }
}
