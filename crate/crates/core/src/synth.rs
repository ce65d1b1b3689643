//! Harmonic-map synthesis: the exact genus-0 engine (Killing fields and
//! exponential frames) and the theta-function engine.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::CurvePoint;
use crate::error::{Error, Result};
use crate::genjac::{FlowSpec, GeneralizedLattice};
use crate::laurent::LaurentMatrix;
use crate::linalg::{expm, C64, CMatrix, CVector, ONE, ZERO};
use crate::spectral::{SectionSpace, SpectralData, Target};
use crate::theta::{generalized_theta_section, kappa_for_divisor, section_offsets, ThetaParams};
use crate::tol::Tolerances;
use crate::curve::PeriodData;

/// Laurent coefficients smaller than this are treated as exact zeros.
pub const CHOP: f64 = 1e-12;

/// Rectangle `[x0, x1] × [y0, y1]` in the coordinate `z_m = x + iy` sampled at
/// `nx × ny` nodes (endpoints included); other coordinates are held at `base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub direction: usize,
    #[serde(default)]
    pub base: Vec<f64>,
}

impl Domain {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Self {
        Domain { x0, x1, y0, y1, nx, ny, direction: 0, base: Vec::new() }
    }

    /// Square grid of spacing `h` centred at `(cx, cy)` with `2m + 1` nodes a side.
    pub fn centered(cx: f64, cy: f64, h: f64, m: usize) -> Self {
        let r = h * m as f64;
        Domain::new(cx - r, cx + r, cy - r, cy + r, 2 * m + 1, 2 * m + 1)
    }

    pub fn hx(&self) -> f64 {
        if self.nx > 1 { (self.x1 - self.x0) / (self.nx - 1) as f64 } else { 0.0 }
    }

    pub fn hy(&self) -> f64 {
        if self.ny > 1 { (self.y1 - self.y0) / (self.ny - 1) as f64 } else { 0.0 }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node `(i, j)` is stored at `j * nx + i`.
    pub fn node(&self, idx: usize) -> (f64, f64) {
        let (i, j) = (idx % self.nx, idx / self.nx);
        (self.x0 + self.hx() * i as f64, self.y0 + self.hy() * j as f64)
    }

    /// Real coordinates `[x_1, y_1, …, x_k, y_k]` at a node.
    pub fn point(&self, idx: usize, k: usize) -> Vec<f64> {
        let mut z = vec![0.0; 2 * k];
        for (a, v) in self.base.iter().enumerate().take(2 * k) {
            z[a] = *v;
        }
        let (x, y) = self.node(idx);
        z[2 * self.direction] += x;
        z[2 * self.direction + 1] += y;
        z
    }
}

/// Multiplication by ν_m in an h-orthonormal basis of Γ(𝓛).
#[derive(Clone, Debug)]
pub struct KillingField {
    pub m: usize,
    pub index: usize,
    pub a: LaurentMatrix,
    pub conj_a: LaurentMatrix,
    /// Largest Laurent coefficient found outside the expected degrees.
    pub stray: f64,
}

/// The rational function ν with principal part ζ^{-1} at `p` (no constant term).
#[derive(Clone, Copy, Debug)]
pub struct Nu {
    pub pole: C64,
    pub scale: C64,
}

impl Nu {
    pub fn eval(&self, w: C64) -> C64 {
        ONE / (self.scale * (w - self.pole))
    }

    /// `conj(ν(ρ(w)))`, `ρ(w) = 1/conj(w)`.
    pub fn eval_rho_conj(&self, w: C64) -> C64 {
        self.eval(ONE / w.conj()).conj()
    }
}

fn sample_half(n1: usize) -> i32 {
    (4 * n1 + 8) as i32
}

/// Laurent matrix of multiplication by `f` on the sections with coefficient
/// columns `basis`.
fn multiplication_operator<F>(data: &SpectralData, space: &SectionSpace, basis: &CMatrix, expected: (i32, i32), f: F) -> Result<(LaurentMatrix, f64)>
where
    F: Fn(C64) -> C64 + Sync,
{
    let curve = data.curve.as_rational().ok_or_else(|| Error::Unsupported("exact engine needs genus 0".into()))?;
    let dim = basis.ncols();
    let err = std::sync::Mutex::new(None);
    let (lm, stray) = LaurentMatrix::from_unit_circle_samples(dim, sample_half(dim), expected, |l| {
        let pts: Vec<CurvePoint> = curve.fiber(l).into_iter().map(|(p, _)| p).collect();
        let e = match space.evaluation(&pts, basis) {
            Ok(e) if e.nrows() == dim => e,
            _ => {
                *err.lock().unwrap() = Some(format!("fiber over {l} is not regular"));
                return CMatrix::zeros(dim, dim);
            }
        };
        let nu = CMatrix::from_diagonal(&CVector::from_fn(dim, |k, _| f(pts[k].x().unwrap_or(ZERO))));
        match e.clone().try_inverse() {
            Some(inv) => inv * nu * e,
            None => {
                *err.lock().unwrap() = Some(format!("evaluation matrix singular over {l}"));
                CMatrix::zeros(dim, dim)
            }
        }
    });
    if let Some(msg) = err.into_inner().unwrap() {
        return Err(Error::Parameter(msg));
    }
    let scale = lm.max_abs().max(1.0);
    Ok((lm.chop(CHOP * scale), stray))
}

pub fn nu_for(data: &SpectralData, m: usize) -> Result<Nu> {
    let curve = data.curve.as_rational().ok_or_else(|| Error::Unsupported("exact engine needs genus 0".into()))?;
    let p = data.marked.p[m];
    let e = data.marked.p_index[m];
    let pole = p.x().ok_or_else(|| Error::Parameter("designated zero at w = ∞".into()))?;
    let scale = match data.target {
        Target::Grassmannian => curve.zeta_scale(&p, e)?,
        Target::ProjectiveUnitary => {
            if e != 1 {
                return Err(Error::Parameter(format!("zero {p} of index {e} for a projective unitary target")));
            }
            curve.zeta_scale(&p, 1)?
        }
    };
    Ok(Nu { pole, scale })
}

pub fn killing_fields(data: &SpectralData) -> Result<Vec<KillingField>> {
    let space = data.sections()?;
    let basis = data.adapted_basis()?;
    let mut out = Vec::new();
    for m in 0..data.k {
        let nu = nu_for(data, m)?;
        let (a, s1) = multiplication_operator(data, &space, &basis, (-1, 0), |w| nu.eval(w))?;
        let (conj_a, s2) = multiplication_operator(data, &space, &basis, (0, 1), |w| nu.eval_rho_conj(w))?;
        out.push(KillingField { m, index: data.marked.p_index[m], a, conj_a, stray: s1.max(s2) });
    }
    Ok(out)
}

/// Killing fields plus the Hermitian form expressed in the adapted basis.
pub fn extended_frame(data: &SpectralData) -> Result<ExtendedFrame> {
    let fields = killing_fields(data)?;
    let space = data.sections()?;
    let basis = data.adapted_basis()?;
    let gram = data.gram_in(&space, &data.witness()?, &basis)?;
    ExtendedFrame::new(fields, gram.transpose())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ExactExponential,
    Theta,
}

/// `F_λ(z) = exp(Σ z_m A_m(λ) − z̄_m conj_A_m(λ))`.
#[derive(Clone, Debug)]
pub struct ExtendedFrame {
    pub fields: Vec<KillingField>,
    pub dim: usize,
    pub provenance: Provenance,
    /// `M` with `h(x, y) = y* M x` in the frame basis.
    pub form: CMatrix,
}

impl ExtendedFrame {
    pub fn new(fields: Vec<KillingField>, form: CMatrix) -> Result<Self> {
        let dim = fields.first().map(|f| f.a.dim()).ok_or_else(|| Error::Parameter("no Killing fields".into()))?;
        for f in &fields {
            for g in &fields {
                let scale = 1.0 + f.a.max_abs() * g.a.max_abs();
                let c1 = f.a.commutator(&g.a).max_abs();
                let c2 = f.a.commutator(&g.conj_a).max_abs();
                if c1 > 1e-9 * scale || c2 > 1e-9 * scale {
                    return Err(Error::Numeric {
                        msg: format!("Killing fields {} and {} do not commute", f.m, g.m),
                        worst: c1.max(c2),
                    });
                }
            }
        }
        Ok(ExtendedFrame { fields, dim, provenance: Provenance::ExactExponential, form })
    }

    /// max ‖F*MF − M‖ over the given λ (on the unit circle) and z samples.
    pub fn unitarity_defect(&self, lambdas: &[C64], zs: &[Vec<f64>]) -> f64 {
        let mut worst = 0.0f64;
        for l in lambdas {
            for z in zs {
                let f = self.eval(z, *l);
                worst = worst.max((f.adjoint() * &self.form * &f - &self.form).norm());
            }
        }
        worst
    }

    /// Exponent `Σ z_m A_m(λ) − z̄_m conj_A_m(λ)`.
    pub fn generator(&self, z: &[f64], lambda: C64) -> CMatrix {
        let mut x = CMatrix::zeros(self.dim, self.dim);
        for f in &self.fields {
            let zm = C64::new(z[2 * f.m], z[2 * f.m + 1]);
            x += f.a.eval(lambda) * zm - f.conj_a.eval(lambda) * zm.conj();
        }
        x
    }

    pub fn eval(&self, z: &[f64], lambda: C64) -> CMatrix {
        expm(&self.generator(z, lambda))
    }
}

/// Sampled map: homogeneous vectors (grassmannian, `(n+1)×k`) or unitary
/// matrices (projective unitary) per node.
#[derive(Clone, Debug)]
pub struct MapGrid {
    pub domain: Domain,
    pub target: Target,
    pub values: Vec<CMatrix>,
    /// Nodes where every component nearly vanished.
    pub degenerate: Vec<usize>,
}

/// Hermitian rank-k projections per node.
#[derive(Clone, Debug)]
pub struct ProjectionField {
    pub domain: Domain,
    pub k: usize,
    pub values: Vec<CMatrix>,
}

pub fn projection(v: &CMatrix) -> CMatrix {
    let gram = v.adjoint() * v;
    let inv = gram.try_inverse().unwrap_or_else(|| CMatrix::zeros(v.ncols(), v.ncols()));
    v * inv * v.adjoint()
}

impl ProjectionField {
    pub fn from_map(map: &MapGrid) -> Self {
        let values: Vec<CMatrix> = map.values.par_iter().map(projection).collect();
        let k = map.values.first().map(|v| v.ncols()).unwrap_or(0);
        ProjectionField { domain: map.domain.clone(), k, values }
    }

    pub fn from_fn<F>(domain: &Domain, k: usize, f: F) -> Self
    where
        F: Fn(f64, f64) -> CMatrix + Sync,
    {
        let values = (0..domain.len())
            .into_par_iter()
            .map(|i| {
                let (x, y) = domain.node(i);
                f(x, y)
            })
            .collect();
        ProjectionField { domain: domain.clone(), k, values }
    }

    /// max over nodes of ‖Π² − Π‖, ‖Π* − Π‖, |tr Π − k|.
    pub fn projection_defect(&self) -> f64 {
        self.values
            .iter()
            .map(|p| {
                let a = (p * p - p).norm();
                let b = (p.adjoint() - p).norm();
                let c = (p.trace().re - self.k as f64).abs() + p.trace().im.abs();
                a.max(b).max(c)
            })
            .fold(0.0, f64::max)
    }
}

fn fill<F>(domain: &Domain, f: F) -> Vec<CMatrix>
where
    F: Fn(usize) -> CMatrix + Sync + Send,
{
    (0..domain.len()).into_par_iter().map(f).collect()
}

pub fn grassmannian_map(frame: &ExtendedFrame, data: &SpectralData, domain: &Domain) -> (MapGrid, ProjectionField) {
    let k = data.k;
    let kdirs = frame.fields.len();
    let values = fill(domain, |i| {
        let f1 = frame.eval(&domain.point(i, kdirs), ONE);
        f1.columns(0, k).into_owned()
    });
    let map = MapGrid { domain: domain.clone(), target: Target::Grassmannian, values, degenerate: Vec::new() };
    let pi = ProjectionField::from_map(&map);
    (map, pi)
}

/// Multiply by the phase that makes the first non-negligible entry real positive.
pub fn phase_normalize(m: &CMatrix) -> CMatrix {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in m.iter() {
        if z.norm() > 1e-8 * scale {
            return m * (z.conj() / z.norm());
        }
    }
    m.clone()
}

pub fn pu_map(frame: &ExtendedFrame, domain: &Domain) -> MapGrid {
    let kdirs = frame.fields.len();
    let values = fill(domain, |i| {
        let z = domain.point(i, kdirs);
        let f1 = frame.eval(&z, ONE);
        let fm = frame.eval(&z, -ONE);
        let inv = f1.try_inverse().expect("unitary frame is invertible");
        phase_normalize(&(fm * inv))
    });
    MapGrid { domain: domain.clone(), target: Target::ProjectiveUnitary, values, degenerate: Vec::new() }
}

/// Everything the theta formula needs for an `n`-component map (`k = 1`).
#[derive(Clone, Debug)]
pub struct ThetaMapSpec {
    /// `None` for genus 0.
    pub params: Option<ThetaParams>,
    /// Offsets Δ_l ∈ C^g.
    pub offsets: Vec<CVector>,
    /// Translate added to the base coordinates.
    pub kappa: CVector,
    pub flow: FlowSpec,
    pub lattice: GeneralizedLattice,
    /// Additive shift of the flow in J′ (used for fiber translations).
    pub shift: CVector,
}

impl ThetaMapSpec {
    pub fn genus(&self) -> usize {
        self.lattice.genus
    }

    /// Homogeneous vector `(c_0 θ_0, c_1 θ_{e_1}, …)` at a point of J′.
    pub fn vector_at(&self, p: &CVector, c: &[C64]) -> Result<CVector> {
        let g = self.genus();
        let n = self.lattice.fibers;
        let mut arg = p.clone();
        for i in 0..g {
            arg[i] += self.kappa[i];
        }
        let mut out = CVector::zeros(n + 1);
        for j in 0..=n {
            let mut idx = vec![0i64; n];
            if j > 0 {
                idx[j - 1] = 1;
            }
            let v = match &self.params {
                Some(params) => generalized_theta_section(&idx, &arg, params, &self.offsets)?,
                None => {
                    let fiber: C64 = (0..n).map(|l| arg[g + l] * idx[l] as f64).sum();
                    fiber.exp()
                }
            };
            out[j] = c[j] * v;
        }
        Ok(out)
    }

    pub fn point(&self, z: &[f64]) -> CVector {
        self.lattice.reduce(&(self.flow.raw(z) + &self.shift))
    }

    pub fn vector(&self, z: &[f64], c: &[C64]) -> Result<CVector> {
        self.vector_at(&self.point(z), c)
    }
}

/// Flow, lattice, offsets and κ for the `n = 1`, `k = 1` theta formula.
pub fn theta_map_spec(data: &SpectralData, tol: &Tolerances) -> Result<(ThetaMapSpec, PeriodData)> {
    if data.k != 1 || data.n() != 1 || data.target != Target::Grassmannian {
        return Err(Error::Unsupported("theta formula implemented for n = 1, k = 1 grassmannian data".into()));
    }
    let curve = &data.curve;
    let g = curve.genus();
    let o = &data.marked.o;
    let pairs: Vec<(CurvePoint, CurvePoint)> = o[1..].iter().map(|x| (o[0], *x)).collect();
    let diffs = curve.differential_basis(&pairs)?;
    let pd = curve.period_lattice(&diffs, tol)?;
    let lattice = pd.lattice.clone();
    let p = data.marked.p[0];
    let u = curve.direction_vector(&pd.normalized, &p, data.marked.p_index[0])?;
    let flow = FlowSpec::new(CMatrix::from_column_slice(u.len(), 1, u.as_slice()), &lattice);
    let shift = CVector::zeros(lattice.dim());
    if g == 0 {
        let spec = ThetaMapSpec { params: None, offsets: Vec::new(), kappa: CVector::zeros(0), flow, lattice, shift };
        return Ok((spec, pd));
    }
    let params = ThetaParams::new(pd.tau.clone(), 1e-14)?;
    let hol = &pd.normalized[..g];
    let base = curve
        .ramification_divisor()
        .into_iter()
        .map(|(x, _)| x)
        .find(|x| x.x().is_some())
        .ok_or_else(|| Error::Structural("no finite branch point".into()))?;
    let abel_sum = |d: &[(CurvePoint, i32)]| -> Result<CVector> {
        let mut acc = CVector::zeros(g);
        for (x, m) in d {
            acc += curve.abel_map(hol, &base, x)? * C64::new(*m as f64, 0.0);
        }
        Ok(acc)
    };
    // D_1 ~ D − (λ)_∞ + Q has degree g; its Abel image fixes κ up to the
    // Riemann constant, which is read off from a generic test divisor.
    let mut target: Vec<(CurvePoint, i32)> = data.line_divisor.clone();
    target.extend(curve.poles().into_iter().map(|(x, m)| (x, -(m as i32))));
    target.push((data.marked.q[0], 1));
    let s = abel_sum(&target)?;
    let test: Vec<CurvePoint> = curve
        .sample_points(4 * g + 4)
        .into_iter()
        .filter(|x| !curve.is_branch_point(x) && x.x().is_some_and(|w| (w.norm() - 1.0).abs() > 0.2))
        .take(g)
        .collect();
    let probe = kappa_for_divisor(curve, hol, &test, &params, &base, tol.theta_zero)?;
    let test_sum = abel_sum(&test.iter().map(|x| (*x, 1)).collect::<Vec<_>>())?;
    let riemann = -(&probe.kappa + &test_sum);
    let base_lattice = GeneralizedLattice::new(pd.lattice.generators.view((0, 0), (g, 2 * g)).into_owned(), g, 0);
    // θ is composed with the Abel map based at O_1
    let kappa = base_lattice.reduce(&(curve.abel_map(hol, &base, &o[0])? - s - riemann));
    let spec = ThetaMapSpec { params: Some(params), offsets: section_offsets(&pd), kappa, flow, lattice, shift };
    Ok((spec, pd))
}

pub fn theta_map(spec: &ThetaMapSpec, c: &[C64], domain: &Domain) -> Result<(MapGrid, ProjectionField)> {
    let k = spec.flow.k();
    let vals: Vec<Result<CVector>> = (0..domain.len()).into_par_iter().map(|i| spec.vector(&domain.point(i, k), c)).collect();
    let mut values = Vec::with_capacity(vals.len());
    let mut degenerate = Vec::new();
    let mut peak = 0.0f64;
    for v in vals {
        let v = v?;
        peak = peak.max(v.norm());
        values.push(CMatrix::from_column_slice(v.len(), 1, v.as_slice()));
    }
    for (i, v) in values.iter().enumerate() {
        if v.norm() <= 1e-12 * peak {
            degenerate.push(i);
        }
    }
    let map = MapGrid { domain: domain.clone(), target: Target::Grassmannian, values, degenerate };
    let pi = ProjectionField::from_map(&map);
    Ok((map, pi))
}

/// Result of the constant calibration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub c: Vec<C64>,
    pub ratio: f64,
    pub residual: f64,
    /// `(log ratio, residual)` pairs visited.
    pub curve: Vec<(f64, f64)>,
}

/// Chooses `|c_1/c_0|` minimizing `residual(c)` (n = 1): coarse scan of the
/// log-ratio then golden-section refinement. `phase` fixes `arg(c_1/c_0)`.
pub fn calibrate_constants<F>(residual: F, phase: C64, threshold: f64) -> Result<Calibration>
where
    F: Fn(&[C64]) -> f64,
{
    let consts = |t: f64| vec![ONE, phase * t.exp()];
    let mut curve = Vec::new();
    let eval = |t: f64, curve: &mut Vec<(f64, f64)>| {
        let r = residual(&consts(t));
        curve.push((t, r));
        r
    };
    let grid: Vec<f64> = (0..=24).map(|i| -3.0 + 0.25 * i as f64).collect();
    let mut best = (0.0, f64::INFINITY);
    for &t in &grid {
        let r = eval(t, &mut curve);
        if r < best.1 {
            best = (t, r);
        }
    }
    let (mut a, mut b) = (best.0 - 0.25, best.0 + 0.25);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - gr * (b - a);
    let mut x2 = a + gr * (b - a);
    let mut f1 = eval(x1, &mut curve);
    let mut f2 = eval(x2, &mut curve);
    for _ in 0..60 {
        if (b - a).abs() < 1e-9 {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = eval(x1, &mut curve);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = eval(x2, &mut curve);
        }
    }
    let t = 0.5 * (a + b);
    let r = eval(t, &mut curve);
    if r > threshold {
        return Err(Error::Calibration { best: r, threshold, curve });
    }
    Ok(Calibration { c: consts(t), ratio: t.exp(), residual: r, curve })
}

/// Calibrates `|c_1/c_0|` of a theta map against the mean fourth-order
/// harmonicity residual on `sample`.
pub fn calibrate_theta(spec: &ThetaMapSpec, sample: &Domain, threshold: f64) -> Result<Calibration> {
    calibrate_constants(
        |c| match theta_map(spec, c, sample) {
            Ok((_, pi)) => crate::verify::projection_residual_fourth(&pi).map(|r| r.1).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        },
        ONE,
        threshold,
    )
}
