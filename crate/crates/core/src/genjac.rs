//! The generalized Jacobian `C^{g+n}/Λ′`, its real slice and the linear flow.

use serde::{Deserialize, Serialize};

use crate::linalg::{C64, CMatrix, CVector, RMatrix};

/// Period lattice `Λ′` of the generalized Jacobian.
///
/// Generators are the columns of `generators`: g unit vectors (a-cycles),
/// g columns of τ augmented by the third-kind b-periods, and one `2πi`
/// generator per fiber direction. `real_involution` is the matrix `C` with
/// `R(v) = conj(C v)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneralizedLattice {
    pub generators: CMatrix,
    pub genus: usize,
    pub fibers: usize,
    pub real_involution: CMatrix,
    #[serde(skip)]
    pinv: Option<RMatrix>,
}

impl GeneralizedLattice {
    pub fn new(generators: CMatrix, genus: usize, fibers: usize) -> Self {
        let dim = generators.nrows();
        let mut out = GeneralizedLattice {
            generators,
            genus,
            fibers,
            real_involution: CMatrix::identity(dim, dim),
            pinv: None,
        };
        out.pinv = Some(out.compute_pinv());
        out
    }

    pub fn dim(&self) -> usize {
        self.generators.nrows()
    }

    pub fn rank(&self) -> usize {
        self.generators.ncols()
    }

    /// Realification `[Re G; Im G]`.
    pub fn real_generators(&self) -> RMatrix {
        let (d, r) = self.generators.shape();
        let mut m = RMatrix::zeros(2 * d, r);
        for i in 0..d {
            for j in 0..r {
                m[(i, j)] = self.generators[(i, j)].re;
                m[(d + i, j)] = self.generators[(i, j)].im;
            }
        }
        m
    }

    fn compute_pinv(&self) -> RMatrix {
        let m = self.real_generators();
        if m.ncols() == 0 {
            return RMatrix::zeros(0, m.nrows());
        }
        m.pseudo_inverse(1e-13).expect("pseudo inverse")
    }

    fn pinv(&self) -> RMatrix {
        match &self.pinv {
            Some(p) => p.clone(),
            None => self.compute_pinv(),
        }
    }

    fn realify(v: &CVector) -> nalgebra::DVector<f64> {
        let d = v.len();
        nalgebra::DVector::from_fn(2 * d, |i, _| if i < d { v[i].re } else { v[i - d].im })
    }

    /// Real coordinates of `v` in the generator basis (least squares on the
    /// real span).
    pub fn coordinates(&self, v: &CVector) -> Vec<f64> {
        let x = self.pinv() * Self::realify(v);
        x.iter().copied().collect()
    }

    pub fn combination(&self, m: &[f64]) -> CVector {
        let mut out = CVector::zeros(self.dim());
        for (j, c) in m.iter().enumerate() {
            if *c != 0.0 {
                out += self.generators.column(j) * C64::new(*c, 0.0);
            }
        }
        out
    }

    /// Canonical representative: subtract the rounded lattice coordinates.
    pub fn reduce(&self, v: &CVector) -> CVector {
        let mut cur = v.clone();
        for _ in 0..2 {
            let m: Vec<f64> = self.coordinates(&cur).iter().map(|x| x.round()).collect();
            if m.iter().all(|x| *x == 0.0) {
                break;
            }
            cur -= self.combination(&m);
        }
        cur
    }

    /// Distance from `v` to the nearest lattice point found by rounding.
    pub fn distance(&self, v: &CVector) -> f64 {
        let m: Vec<f64> = self.coordinates(v).iter().map(|x| x.round()).collect();
        (v - self.combination(&m)).norm()
    }

    pub fn contains(&self, v: &CVector, tol: f64) -> bool {
        self.distance(v) <= tol
    }

    /// `R(v) = conj(C v)`.
    pub fn apply_real(&self, v: &CVector) -> CVector {
        (&self.real_involution * v).map(|z| z.conj())
    }

    /// Largest distance from `R(generator)` to the lattice.
    pub fn involution_defect(&self) -> f64 {
        (0..self.rank())
            .map(|j| self.distance(&self.apply_real(&self.generators.column(j).into_owned())))
            .fold(0.0, f64::max)
    }

    pub fn is_real_point(&self, p: &CVector, tol: f64) -> bool {
        self.contains(&(p + self.apply_real(p)), tol)
    }

    /// Add `i·t` to the fiber coordinates.
    pub fn fiber_translate(&self, p: &CVector, t: &[f64]) -> CVector {
        let mut out = p.clone();
        for (l, tl) in t.iter().enumerate().take(self.fibers) {
            out[self.genus + l] += C64::new(0.0, *tl);
        }
        out
    }
}

/// Direction data of the linear flow `z ↦ U·z + Ū·z̄`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowSpec {
    /// Columns `U_j`.
    pub u: CMatrix,
    /// Columns `Ū_j = −R(U_j)`.
    pub conj_u: CMatrix,
}

impl FlowSpec {
    pub fn new(u: CMatrix, lattice: &GeneralizedLattice) -> Self {
        let mut conj_u = CMatrix::zeros(u.nrows(), u.ncols());
        for j in 0..u.ncols() {
            let r = lattice.apply_real(&u.column(j).into_owned());
            conj_u.set_column(j, &(-r));
        }
        FlowSpec { u, conj_u }
    }

    pub fn k(&self) -> usize {
        self.u.ncols()
    }

    /// `z` given as `[x_1, y_1, x_2, y_2, ...]`.
    pub fn raw(&self, z: &[f64]) -> CVector {
        let mut out = CVector::zeros(self.u.nrows());
        for j in 0..self.k() {
            let zj = C64::new(z[2 * j], z[2 * j + 1]);
            out += self.u.column(j) * zj + self.conj_u.column(j) * zj.conj();
        }
        out
    }

    pub fn gamma(&self, z: &[f64], lattice: &GeneralizedLattice) -> CVector {
        lattice.reduce(&self.raw(z))
    }

    /// Real tangent vectors `∂γ/∂x_j, ∂γ/∂y_j` stacked as realified columns.
    pub fn real_tangents(&self) -> RMatrix {
        let d = self.u.nrows();
        let mut m = RMatrix::zeros(2 * d, 2 * self.k());
        for j in 0..self.k() {
            let dx = self.u.column(j) + self.conj_u.column(j);
            let dy = (self.u.column(j) - self.conj_u.column(j)) * C64::new(0.0, 1.0);
            for i in 0..d {
                m[(i, 2 * j)] = dx[i].re;
                m[(d + i, 2 * j)] = dx[i].im;
                m[(i, 2 * j + 1)] = dy[i].re;
                m[(d + i, 2 * j + 1)] = dy[i].im;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn reduce_kills_generators() {
        let g = CMatrix::from_row_slice(1, 2, &[c(1.0, 0.0), c(0.3, 1.1)]);
        let lat = GeneralizedLattice::new(g, 1, 0);
        let v = CVector::from_vec(vec![c(2.3, 3.3)]);
        let shifted = &v + lat.combination(&[1.0, 3.0]);
        assert!((lat.reduce(&v) - lat.reduce(&shifted)).norm() < 1e-12);
        assert!(lat.reduce(&lat.combination(&[1.0, 0.0])).norm() < 1e-12);
    }
}
