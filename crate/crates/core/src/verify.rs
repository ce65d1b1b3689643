//! Independent checks on synthesized maps: loop-algebra structure, discrete
//! harmonicity, conformality, equivariance, isometries, algebraic type and
//! periods.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genjac::{FlowSpec, GeneralizedLattice};
use crate::laurent::LaurentMatrix;
use crate::linalg::{polar_unitary, C64, CMatrix, RMatrix, ONE, ZERO};
use crate::spectral::{SpectralData, Target};
use crate::synth::{Domain, KillingField, MapGrid, ProjectionField};

/// One offending Laurent coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: usize,
    pub part: String,
    pub degree: i32,
    pub row: usize,
    pub col: usize,
    pub value: C64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StructureReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

fn collect(out: &mut Vec<Violation>, field: usize, part: &str, m: &LaurentMatrix, bad: impl Fn(i32, usize, usize) -> bool) {
    for (d, c) in m.terms() {
        for i in 0..c.nrows() {
            for j in 0..c.ncols() {
                if c[(i, j)] != ZERO && bad(d, i, j) {
                    out.push(Violation { field, part: part.into(), degree: d, row: i, col: j, value: c[(i, j)] });
                }
            }
        }
    }
}

/// `K A(ζ²) K^{-1}` with `K = diag(I_k, ζ I)`, as a Laurent matrix in ζ.
pub fn kappa_conjugate(a: &LaurentMatrix, k: usize) -> LaurentMatrix {
    let dim = a.dim();
    let mut out = LaurentMatrix::zero(dim);
    for (d, c) in a.terms() {
        for i in 0..dim {
            for j in 0..dim {
                if c[(i, j)] == ZERO {
                    continue;
                }
                let e = 2 * d + (i >= k) as i32 - (j >= k) as i32;
                let mut m = CMatrix::zeros(dim, dim);
                m[(i, j)] = c[(i, j)];
                out.add_term(e, &m);
            }
        }
    }
    out
}

/// Exact (coefficient-level) structure of the Killing fields.
pub fn loop_structure_check(fields: &[KillingField], data: &SpectralData) -> StructureReport {
    let k = data.k;
    let mut v = Vec::new();
    for f in fields {
        collect(&mut v, f.m, "A degree", &f.a, |d, _, _| !(-1..=0).contains(&d));
        collect(&mut v, f.m, "conj_A degree", &f.conj_a, |d, _, _| !(0..=1).contains(&d));
        match data.target {
            Target::Grassmannian => {
                // a_{-1} lower-left, a_0 upper-plus-diagonal blocks
                collect(&mut v, f.m, "a_-1 block", &f.a, |d, i, j| d == -1 && !(i >= k && j < k));
                collect(&mut v, f.m, "a_0 block", &f.a, |d, i, j| d == 0 && i >= k && j < k);
                let z = kappa_conjugate(&f.a, k);
                collect(&mut v, f.m, "κ-conjugated degree", &z, |d, _, _| !(-1..=0).contains(&d));
                collect(&mut v, f.m, "κ-conjugated ζ^-1 off-block", &z, |d, i, j| d == -1 && (i < k) == (j < k));
                collect(&mut v, f.m, "κ-conjugated ζ^0 diagonal-block", &z, |d, i, j| d == 0 && (i < k) != (j < k));
            }
            Target::ProjectiveUnitary => {
                let q = one_minus_inverse_quotient(&f.a);
                match q {
                    Ok(q) => collect(&mut v, f.m, "(1-λ^-1) quotient degree", &q, |d, _, _| d != 0),
                    Err(rem) => collect(&mut v, f.m, "(1-λ^-1) remainder", &rem, |_, _, _| true),
                }
            }
        }
    }
    StructureReport { passed: v.is_empty(), violations: v }
}

/// Divides `A(λ) − A(1)` by `1 − λ^{-1}`; `Err` carries a nonzero remainder.
pub fn one_minus_inverse_quotient(a: &LaurentMatrix) -> std::result::Result<LaurentMatrix, LaurentMatrix> {
    let dim = a.dim();
    let p = a.sub(&LaurentMatrix::from_terms(dim, vec![(0, a.eval(ONE))])).chop(1e-12 * a.max_abs().max(1.0));
    let mut q = LaurentMatrix::zero(dim);
    let mut acc = CMatrix::zeros(dim, dim);
    let terms: Vec<(i32, CMatrix)> = p.terms().map(|(d, c)| (d, c.clone())).collect();
    for (d, c) in terms.iter().rev() {
        acc += c;
        q.add_term(*d, &acc);
    }
    let tol = 1e-12 * a.max_abs().max(1.0);
    if acc.iter().any(|z| z.norm() > tol) {
        return Err(LaurentMatrix::from_terms(dim, vec![(0, acc)]));
    }
    Ok(q.chop(tol))
}

/// Residual of the discrete harmonic-map equation under refinement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualReport {
    pub h: f64,
    pub sup: f64,
    pub mean: f64,
    /// `(h, sup)` per level, coarse to fine.
    pub levels: Vec<(f64, f64)>,
    /// Least-squares slope of `log sup` against `log h`; needs ≥ 3 levels.
    pub slope: Option<f64>,
    /// Every level is within 100·ε/h² of zero, so the slope carries no
    /// information about truncation error.
    pub roundoff_limited: bool,
    pub tol: f64,
    /// Finest residual within `tol`, and slope 2 ± 0.2 unless roundoff-limited.
    pub passed: bool,
}

impl ResidualReport {
    pub fn slope_ok(&self, want: f64, spread: f64) -> bool {
        self.slope.is_some_and(|s| (s - want).abs() <= spread)
    }
}

fn interior(domain: &Domain, margin: usize) -> Result<Vec<usize>> {
    if domain.nx < 2 * margin + 3 || domain.ny < 2 * margin + 3 {
        return Err(Error::Input(format!("grid {}×{} too coarse (< 3 interior nodes)", domain.nx, domain.ny)));
    }
    let mut out = Vec::new();
    for j in margin..domain.ny - margin {
        for i in margin..domain.nx - margin {
            out.push(j * domain.nx + i);
        }
    }
    Ok(out)
}

fn sup_mean(v: &[f64]) -> (f64, f64) {
    let sup = v.iter().copied().fold(0.0, f64::max);
    let mean = if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    (sup, mean)
}

/// sup and mean of `‖[Δ_h Π, Π]‖` over interior nodes.
pub fn projection_residual(pi: &ProjectionField) -> Result<(f64, f64)> {
    let d = &pi.domain;
    let nodes = interior(d, 1)?;
    let (hx2, hy2) = (d.hx() * d.hx(), d.hy() * d.hy());
    let nx = d.nx;
    let vals: Vec<f64> = nodes
        .par_iter()
        .map(|&c| {
            let p = &pi.values;
            let lap = (&p[c + 1] + &p[c - 1] - &p[c] * C64::new(2.0, 0.0)) / C64::new(hx2, 0.0)
                + (&p[c + nx] + &p[c - nx] - &p[c] * C64::new(2.0, 0.0)) / C64::new(hy2, 0.0);
            (&lap * &p[c] - &p[c] * &lap).norm()
        })
        .collect();
    Ok(sup_mean(&vals))
}

/// As [`projection_residual`] with the fourth-order Laplacian stencil.
pub fn projection_residual_fourth(pi: &ProjectionField) -> Result<(f64, f64)> {
    let d = &pi.domain;
    let nodes = interior(d, 2)?;
    let nx = d.nx;
    let second = |c: usize, step: usize, h: f64| -> CMatrix {
        let p = &pi.values;
        (-(&p[c + 2 * step] + &p[c - 2 * step]) + (&p[c + step] + &p[c - step]) * C64::new(16.0, 0.0) - &p[c] * C64::new(30.0, 0.0))
            / C64::new(12.0 * h * h, 0.0)
    };
    let vals: Vec<f64> = nodes
        .par_iter()
        .map(|&c| {
            let lap = second(c, 1, d.hx()) + second(c, nx, d.hy());
            let p = &pi.values[c];
            (&lap * p - p * &lap).norm()
        })
        .collect();
    Ok(sup_mean(&vals))
}

/// sup and mean of the trace-free part of `∂_x(Ψ⁻¹Ψ_x) + ∂_y(Ψ⁻¹Ψ_y)` (half of
/// which is `∂(Ψ⁻¹∂̄Ψ) + ∂̄(Ψ⁻¹∂Ψ)`), in conservative form.
pub fn unitary_residual(map: &MapGrid) -> Result<(f64, f64)> {
    let d = &map.domain;
    let nodes = interior(d, 1)?;
    let inv: Vec<CMatrix> = map.values.par_iter().map(|m| m.clone().try_inverse().unwrap_or_else(|| m.adjoint())).collect();
    let nx = d.nx;
    let half = C64::new(0.5, 0.0);
    let current = |a: usize, b: usize, h: f64| -> CMatrix {
        (&inv[a] + &inv[b]) * half * (&map.values[b] - &map.values[a]) / C64::new(h, 0.0)
    };
    let vals: Vec<f64> = nodes
        .par_iter()
        .map(|&c| {
            let mut div = (current(c, c + 1, d.hx()) - current(c - 1, c, d.hx())) / C64::new(d.hx(), 0.0);
            div += (current(c, c + nx, d.hy()) - current(c - nx, c, d.hy())) / C64::new(d.hy(), 0.0);
            let tr = div.trace() / C64::new(div.nrows() as f64, 0.0);
            for i in 0..div.nrows() {
                div[(i, i)] -= tr;
            }
            0.5 * div.norm()
        })
        .collect();
    Ok(sup_mean(&vals))
}

fn summarize(levels: Vec<(f64, f64, f64)>, tol: f64) -> ResidualReport {
    let slope = if levels.len() >= 3 && levels.iter().all(|l| l.1 > 0.0) {
        let xs: Vec<f64> = levels.iter().map(|l| l.0.ln()).collect();
        let ys: Vec<f64> = levels.iter().map(|l| l.1.ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    let finest = levels.iter().copied().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap_or((0.0, 0.0, 0.0));
    let roundoff_limited = !levels.is_empty() && levels.iter().all(|l| l.1 <= 100.0 * f64::EPSILON / (l.0 * l.0));
    let passed = finest.1 <= tol && (roundoff_limited || slope.is_none_or(|s| (s - 2.0).abs() <= 0.2));
    ResidualReport {
        h: finest.0,
        sup: finest.1,
        mean: finest.2,
        levels: levels.iter().map(|l| (l.0, l.1)).collect(),
        slope,
        roundoff_limited,
        tol,
        passed,
    }
}

/// `[Δ_hΠ, Π]` residual over a refinement sequence of projection fields.
pub fn harmonicity_residual(levels: &[ProjectionField], tol: f64) -> Result<ResidualReport> {
    let mut rows = Vec::new();
    for pi in levels {
        let (sup, mean) = projection_residual(pi)?;
        rows.push((pi.domain.hx().max(pi.domain.hy()), sup, mean));
    }
    Ok(summarize(rows, tol))
}

/// Divergence-form residual over a refinement sequence of unitary grids.
pub fn harmonicity_residual_unitary(levels: &[MapGrid], tol: f64) -> Result<ResidualReport> {
    let mut rows = Vec::new();
    for m in levels {
        let (sup, mean) = unitary_residual(m)?;
        rows.push((m.domain.hx().max(m.domain.hy()), sup, mean));
    }
    Ok(summarize(rows, tol))
}

/// Discrete `tr(∂Π ∂Π)` with fourth-order differences, `∂ = (∂_x − i∂_y)/2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConformalityReport {
    pub nodes: Vec<usize>,
    pub values: Vec<C64>,
    pub min_abs: f64,
    pub max_abs: f64,
}

impl ConformalityReport {
    /// Bounded away from zero on the grid.
    pub fn non_conformal(&self, floor: f64) -> bool {
        self.min_abs >= floor
    }
}

pub fn conformality_function(pi: &ProjectionField) -> Result<ConformalityReport> {
    let d = &pi.domain;
    let nodes = interior(d, 2)?;
    let nx = d.nx as isize;
    let diff = |c: usize, step: isize, h: f64| -> CMatrix {
        let at = |o: isize| &pi.values[(c as isize + o * step) as usize];
        (at(-2) - at(2) + (at(1) - at(-1)) * C64::new(8.0, 0.0)) / C64::new(12.0 * h, 0.0)
    };
    let values: Vec<C64> = nodes
        .par_iter()
        .map(|&c| {
            let dz = (diff(c, 1, d.hx()) - diff(c, nx, d.hy()) * C64::new(0.0, 1.0)) * C64::new(0.5, 0.0);
            (&dz * &dz).trace()
        })
        .collect();
    let min_abs = values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    let max_abs = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(ConformalityReport { nodes, values, min_abs, max_abs })
}

/// Unitary fitted so that `Π2 ≈ h Π1 h*`, with the worst Fubini–Study distance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsometryReport {
    pub conjugator: CMatrix,
    pub residual: f64,
}

/// Fits `h` from the linear conditions `Π2 h = h Π1` (smallest eigenvector
/// of the accumulated normal matrix), then projects to the unitary group.
pub fn fit_conjugator(pairs: &[(&CMatrix, &CMatrix)]) -> IsometryReport {
    let d = pairs.first().map(|p| p.0.nrows()).unwrap_or(1);
    let eye = CMatrix::identity(d, d);
    let mut normal = CMatrix::zeros(d * d, d * d);
    for (p1, p2) in pairs {
        let m = eye.kronecker(p2) - p1.transpose().kronecker(&eye);
        normal += m.adjoint() * m;
    }
    let eig = nalgebra::SymmetricEigen::new(normal);
    let mut best = 0;
    for i in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let v = eig.eigenvectors.column(best);
    let h = polar_unitary(&CMatrix::from_column_slice(d, d, v.as_slice()));
    let residual = pairs
        .iter()
        .map(|(p1, p2)| (*p2 - &h * *p1 * h.adjoint()).norm() / 2f64.sqrt())
        .fold(0.0, f64::max);
    IsometryReport { conjugator: h, residual }
}

pub fn isometry_check(pi1: &ProjectionField, pi2: &ProjectionField) -> Result<IsometryReport> {
    if pi1.values.len() != pi2.values.len() {
        return Err(Error::Input("projection fields on different grids".into()));
    }
    let pairs: Vec<(&CMatrix, &CMatrix)> = pi1.values.iter().zip(&pi2.values).collect();
    Ok(fit_conjugator(&pairs))
}

/// Real tangent directions `s ∈ R^{2k}` whose flow stays in the fiber of
/// `J′ → J`; for genus 0 every direction.
pub fn equivariance_directions(flow: &FlowSpec, lattice: &GeneralizedLattice) -> Vec<Vec<f64>> {
    let g = lattice.genus;
    let d = lattice.dim();
    let t = flow.real_tangents();
    let cols = t.ncols();
    let mut base = RMatrix::zeros(2 * g, cols);
    for i in 0..g {
        base.set_row(i, &t.row(i));
        base.set_row(g + i, &t.row(d + i));
    }
    real_kernel(&base, 1e-8)
}

fn real_kernel(m: &RMatrix, rel: f64) -> Vec<Vec<f64>> {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return (0..cols).map(|j| (0..cols).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    }
    let mut sq = RMatrix::zeros(cols.max(m.nrows()), cols);
    sq.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= rel * top.max(1.0) {
            let mut v: Vec<f64> = vt.row(i).iter().copied().collect();
            let lead = v.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            out.push(v);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub directions: Vec<Vec<f64>>,
    /// Worst residual per direction over all tested shifts.
    pub residuals: Vec<f64>,
    pub total: bool,
}

impl EquivarianceReport {
    pub fn worst(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// For each direction `s` and shift `t`, fits `h` with `Π(z + ts) ≈ hΠ(z)h*`
/// over the sample points and records the worst residual.
pub fn equivariance_check<F>(eval: F, directions: &[Vec<f64>], samples: &[Vec<f64>], shifts: &[f64], total: bool) -> EquivarianceReport
where
    F: Fn(&[f64]) -> CMatrix + Sync,
{
    let base: Vec<CMatrix> = samples.par_iter().map(|z| eval(z)).collect();
    let residuals = directions
        .iter()
        .map(|s| {
            shifts
                .iter()
                .map(|t| {
                    let moved: Vec<CMatrix> = samples
                        .par_iter()
                        .map(|z| {
                            let w: Vec<f64> = z.iter().zip(s).map(|(a, b)| a + t * b).collect();
                            eval(&w)
                        })
                        .collect();
                    let pairs: Vec<(&CMatrix, &CMatrix)> = base.iter().zip(&moved).collect();
                    fit_conjugator(&pairs).residual
                })
                .fold(0.0, f64::max)
        })
        .collect();
    EquivarianceReport { directions: directions.to_vec(), residuals, total }
}

/// Search limits for classification and period enumeration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bounds {
    /// Largest denominator tried in rational-relation search.
    pub q_max: i64,
    /// Periods are sought with `‖z*‖_∞ ≤ radius`.
    pub radius: f64,
    pub tol: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { q_max: 50, radius: 10.0, tol: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlgebraicTag {
    A,
    B,
    C,
    #[serde(rename = "none")]
    None,
}

impl std::fmt::Display for AlgebraicTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AlgebraicTag::A => "A",
            AlgebraicTag::B => "B",
            AlgebraicTag::C => "C",
            AlgebraicTag::None => "none",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraicType {
    pub tag: AlgebraicTag,
    pub evidence: Vec<String>,
}

/// Best rational `p/q` with `q ≤ q_max` and `|x − p/q| ≤ 1e-7/q²`.
pub fn rational_approx(x: f64, q_max: i64) -> Option<(i64, i64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 > q_max {
            break;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= 1e-7 / (k2 * k2) as f64 {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a as f64;
        if frac.abs() < 1e-300 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

/// Flow tangents in real lattice coordinates (rank × 2k) and the part of the
/// tangents outside the real span of Λ′.
pub fn lattice_tangents(flow: &FlowSpec, lattice: &GeneralizedLattice) -> (RMatrix, f64) {
    let d = lattice.dim();
    let t = flow.real_tangents();
    let mut out = RMatrix::zeros(lattice.rank(), t.ncols());
    let mut off = 0.0f64;
    for j in 0..t.ncols() {
        let v = crate::linalg::CVector::from_fn(d, |i, _| C64::new(t[(i, j)], t[(d + i, j)]));
        let c = lattice.coordinates(&v);
        off = off.max((lattice.combination(&c) - &v).norm());
        for (i, x) in c.iter().enumerate() {
            out[(i, j)] = *x;
        }
    }
    (out, off)
}

/// Row subset of size `r` whose minor has the largest smallest singular value.
fn pivot_rows(m: &RMatrix, r: usize) -> Option<Vec<usize>> {
    let rows = m.nrows();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut idx: Vec<usize> = (0..r).collect();
    if r > rows {
        return None;
    }
    loop {
        let sub = RMatrix::from_fn(r, m.ncols(), |i, j| m[(idx[i], j)]);
        let s = sub.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|b| s > b.0 + 1e-14) {
            best = Some((s, idx.clone()));
        }
        let mut i = r;
        loop {
            if i == 0 {
                return best.map(|b| b.1);
            }
            i -= 1;
            if idx[i] < rows - r + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn numeric_rank(m: &RMatrix, rel: f64) -> usize {
    let top = m.singular_values().iter().copied().fold(0.0, f64::max);
    m.singular_values().iter().filter(|s| **s > rel * top.max(1e-300)).count()
}

pub fn classify_algebraic(data: &SpectralData, lattice: &GeneralizedLattice, flow: &FlowSpec, bounds: &Bounds) -> AlgebraicType {
    let g = data.curve.genus();
    let mut evidence = vec![format!("genus {g}, deg λ = {}", data.curve.degree())];
    if g == 0 {
        evidence.push("rational spectral curve".into());
        return AlgebraicType { tag: AlgebraicTag::A, evidence };
    }
    if g == 1 && data.curve.degree() == 2 && data.curve.as_hyperelliptic().is_some() {
        evidence.push("hyperelliptic, dim J′ = 2".into());
        return AlgebraicType { tag: AlgebraicTag::B, evidence };
    }
    let (m, off) = lattice_tangents(flow, lattice);
    evidence.push(format!("flow off the real span of Λ′ by {off:.3e}"));
    let r = numeric_rank(&m, 1e-9);
    let Some(piv) = pivot_rows(&m, r) else {
        return AlgebraicType { tag: AlgebraicTag::None, evidence };
    };
    let b = RMatrix::from_fn(r, m.ncols(), |i, j| m[(piv[i], j)]);
    // rows outside the pivot set as combinations of the pivot rows
    let bt_pinv = b.transpose().pseudo_inverse(1e-12).expect("pseudo inverse");
    let mut all_rational = off <= bounds.tol;
    for row in 0..m.nrows() {
        if piv.contains(&row) {
            continue;
        }
        let coeffs = &bt_pinv * m.row(row).transpose();
        for (i, c) in coeffs.iter().enumerate() {
            match rational_approx(*c, bounds.q_max) {
                Some((p, q)) => evidence.push(format!("row {row} / pivot {}: {p}/{q}", piv[i])),
                None => {
                    evidence.push(format!("row {row} / pivot {}: {c:.12} not rational within Q = {}", piv[i], bounds.q_max));
                    all_rational = false;
                }
            }
        }
    }
    let tag = if all_rational { AlgebraicTag::C } else { AlgebraicTag::None };
    AlgebraicType { tag, evidence }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodReport {
    /// Directions along which the flow is constant in J′.
    pub continuous: Vec<Vec<f64>>,
    /// Every period found in the search box, shortest first.
    pub periods: Vec<Vec<f64>>,
    /// Greedy independent subset of `periods`.
    pub basis: Vec<Vec<f64>>,
}

impl PeriodReport {
    pub fn independent(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        self.periods.iter().any(|p| p.iter().zip(z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) <= tol)
    }
}

/// All `z*` in the box with `U·z* + Ū·z̄* ∈ Λ′`.
pub fn periodicity_search(flow: &FlowSpec, lattice: &GeneralizedLattice, bounds: &Bounds) -> PeriodReport {
    let (m, off) = lattice_tangents(flow, lattice);
    let cols = m.ncols();
    let continuous = real_kernel(&m, 1e-9);
    let empty = PeriodReport { continuous: continuous.clone(), periods: Vec::new(), basis: Vec::new() };
    if off > bounds.tol {
        return empty;
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|i| svd.singular_values[*i] > 1e-9 * top.max(1e-300)).collect();
    let r = keep.len();
    if r == 0 {
        return empty;
    }
    // z = V_r w restricts to the complement of the continuous directions
    let vr = RMatrix::from_fn(cols, r, |i, j| vt[(keep[j], i)]);
    let mr = &m * &vr;
    let Some(piv) = pivot_rows(&mr, r) else {
        return empty;
    };
    let b = RMatrix::from_fn(r, r, |i, j| mr[(piv[i], j)]);
    let Some(b_inv) = b.clone().try_inverse() else {
        return empty;
    };
    let limits: Vec<i64> = (0..r).map(|i| (b.row(i).iter().map(|x| x.abs()).sum::<f64>() * bounds.radius * (cols as f64).sqrt()).ceil() as i64).collect();
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<i64> = limits.iter().map(|l| -l).collect();
    'outer: loop {
        if idx.iter().any(|x| *x != 0) {
            let mp = nalgebra::DVector::from_iterator(r, idx.iter().map(|x| *x as f64));
            let w = &b_inv * mp;
            let z = &vr * &w;
            if z.iter().all(|x| x.abs() <= bounds.radius + 1e-12) {
                let img = &m * &z;
                if img.iter().all(|x| (x - x.round()).abs() <= bounds.tol) {
                    found.push(z.iter().copied().collect());
                }
            }
        }
        for i in 0..r {
            if idx[i] < limits[i] {
                idx[i] += 1;
                continue 'outer;
            }
            idx[i] = -limits[i];
        }
        break;
    }
    let norm = |v: &Vec<f64>| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    found.sort_by(|a, b| norm(a).total_cmp(&norm(b)).then_with(|| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in &found {
        let mut trial = basis.clone();
        trial.push(p.clone());
        let mat = RMatrix::from_fn(cols, trial.len(), |i, j| trial[j][i]);
        if numeric_rank(&mat, 1e-8) == trial.len() {
            basis = trial;
        }
    }
    PeriodReport { continuous, periods: found, basis }
}
