//! Spectral curves: rational covers of the sphere and hyperelliptic curves,
//! with their real involution, differentials, periods and Abel maps.

mod hyper;
mod rational;

pub use hyper::{HyperellipticCurve, LoopIntegrals};
pub use rational::RationalCurve;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genjac::GeneralizedLattice;
use crate::linalg::{lstsq, C64, CMatrix, CVector, Poly, ZERO};
use crate::report::ValidationReport;
use crate::tol::Tolerances;

/// A point of the curve. For rational curves `x` is the coordinate `w` and
/// `sheet` is 0. For hyperelliptic curves `x` is the value of λ and
/// `y = sheet * y_principal(λ)`; branch points carry sheet 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CurvePoint {
    Finite { x: C64, sheet: i8 },
    Infinity { sheet: i8 },
}

impl CurvePoint {
    pub fn w(x: C64) -> Self {
        CurvePoint::Finite { x, sheet: 0 }
    }

    pub fn at(x: C64, sheet: i8) -> Self {
        CurvePoint::Finite { x, sheet }
    }

    pub fn x(&self) -> Option<C64> {
        match self {
            CurvePoint::Finite { x, .. } => Some(*x),
            CurvePoint::Infinity { .. } => None,
        }
    }

    pub fn sheet(&self) -> i8 {
        match self {
            CurvePoint::Finite { sheet, .. } | CurvePoint::Infinity { sheet } => *sheet,
        }
    }

    pub fn close_to(&self, other: &CurvePoint, tol: f64) -> bool {
        match (self, other) {
            (CurvePoint::Finite { x: a, sheet: s }, CurvePoint::Finite { x: b, sheet: t }) => {
                s == t && (a - b).norm() <= tol * (1.0 + a.norm())
            }
            (CurvePoint::Infinity { sheet: s }, CurvePoint::Infinity { sheet: t }) => s == t,
            _ => false,
        }
    }
}

impl std::fmt::Display for CurvePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CurvePoint::Finite { x, sheet: 0 } => write!(f, "({}{:+}i)", x.re, x.im),
            CurvePoint::Finite { x, sheet } => write!(f, "({}{:+}i)[{}]", x.re, x.im, sheet),
            CurvePoint::Infinity { sheet: 0 } => write!(f, "(inf)"),
            CurvePoint::Infinity { sheet } => write!(f, "(inf)[{}]", sheet),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferentialKind {
    Holomorphic,
    ThirdKind,
}

/// A differential on the curve, stored as
/// `Σ hol[i] λ^i dλ/y + weight · ω_{p,q}` where `ω_{p,q}` is the
/// elementary third-kind differential with residue +1 at `p`, −1 at `q`.
/// On rational curves only the third-kind part is used (`dw/(w−p) − dw/(w−q)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Differential {
    pub kind: DifferentialKind,
    pub hol: Vec<C64>,
    pub poles: Option<(CurvePoint, CurvePoint)>,
    pub weight: C64,
}

impl Differential {
    pub fn holomorphic(hol: Vec<C64>) -> Self {
        Differential { kind: DifferentialKind::Holomorphic, hol, poles: None, weight: ZERO }
    }

    pub fn third_kind(p: CurvePoint, q: CurvePoint) -> Self {
        Differential {
            kind: DifferentialKind::ThirdKind,
            hol: Vec::new(),
            poles: Some((p, q)),
            weight: C64::new(1.0, 0.0),
        }
    }

    /// `self + s * other` (holomorphic parts added; the pole pair of a
    /// third-kind term is kept from whichever side has one).
    pub fn add_scaled(&self, other: &Differential, s: C64) -> Differential {
        let n = self.hol.len().max(other.hol.len());
        let mut hol = vec![ZERO; n];
        for (i, v) in self.hol.iter().enumerate() {
            hol[i] += v;
        }
        for (i, v) in other.hol.iter().enumerate() {
            hol[i] += v * s;
        }
        let (poles, weight, kind) = match (&self.poles, &other.poles) {
            (Some(p), None) => (Some(*p), self.weight, self.kind),
            (None, Some(p)) => (Some(*p), other.weight * s, DifferentialKind::ThirdKind),
            (None, None) => (None, ZERO, DifferentialKind::Holomorphic),
            (Some(p), Some(_)) => (Some(*p), self.weight + other.weight * s, DifferentialKind::ThirdKind),
        };
        Differential { kind, hol, poles, weight }
    }

    pub fn scaled(&self, s: C64) -> Differential {
        Differential {
            kind: self.kind,
            hol: self.hol.iter().map(|v| v * s).collect(),
            poles: self.poles,
            weight: self.weight * s,
        }
    }
}

/// Input description of a curve (config format).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveSpec {
    Rational { numerator: Vec<C64>, denominator: Vec<C64> },
    Hyperelliptic { branch_points: Vec<BranchSpec> },
}

/// A branch point: a complex value `[re, im]` or the string `"inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BranchSpec {
    Point(C64),
    Named(String),
}

#[derive(Clone, Debug)]
pub enum SpectralCurve {
    Rational(RationalCurve),
    Hyperelliptic(HyperellipticCurve),
}

impl SpectralCurve {
    pub fn from_spec(spec: &CurveSpec) -> Result<Self> {
        match spec {
            CurveSpec::Rational { numerator, denominator } => Ok(SpectralCurve::Rational(
                RationalCurve::new(Poly::new(numerator.clone()), Poly::new(denominator.clone()))?,
            )),
            CurveSpec::Hyperelliptic { branch_points } => {
                let mut finite = Vec::new();
                let mut infinity = false;
                for b in branch_points {
                    match b {
                        BranchSpec::Point(z) => finite.push(*z),
                        BranchSpec::Named(s) if s.eq_ignore_ascii_case("inf") => {
                            if infinity {
                                return Err(Error::Structural("infinity listed twice".into()));
                            }
                            infinity = true
                        }
                        BranchSpec::Named(s) => {
                            return Err(Error::Structural(format!("unknown branch point {s:?}")))
                        }
                    }
                }
                Ok(SpectralCurve::Hyperelliptic(HyperellipticCurve::new(finite, infinity)?))
            }
        }
    }

    pub fn genus(&self) -> usize {
        match self {
            SpectralCurve::Rational(_) => 0,
            SpectralCurve::Hyperelliptic(h) => h.genus(),
        }
    }

    /// Degree of λ as a map to the sphere.
    pub fn degree(&self) -> usize {
        match self {
            SpectralCurve::Rational(r) => r.degree(),
            SpectralCurve::Hyperelliptic(_) => 2,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, SpectralCurve::Rational(_))
    }

    pub fn as_rational(&self) -> Option<&RationalCurve> {
        match self {
            SpectralCurve::Rational(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_hyperelliptic(&self) -> Option<&HyperellipticCurve> {
        match self {
            SpectralCurve::Hyperelliptic(h) => Some(h),
            _ => None,
        }
    }

    /// λ at a point; `None` at poles of λ.
    pub fn lambda(&self, p: &CurvePoint) -> Option<C64> {
        match self {
            SpectralCurve::Rational(r) => r.lambda_at(p),
            SpectralCurve::Hyperelliptic(_) => p.x(),
        }
    }

    /// All points over a finite value of λ, with ramification indices.
    pub fn fiber(&self, value: C64) -> Vec<(CurvePoint, usize)> {
        match self {
            SpectralCurve::Rational(r) => r.fiber(value),
            SpectralCurve::Hyperelliptic(h) => h.fiber(value),
        }
    }

    pub fn zeros(&self) -> Vec<(CurvePoint, usize)> {
        self.fiber(ZERO)
    }

    pub fn poles(&self) -> Vec<(CurvePoint, usize)> {
        match self {
            SpectralCurve::Rational(r) => r.poles(),
            SpectralCurve::Hyperelliptic(h) => h.poles(),
        }
    }

    pub fn rho(&self, p: &CurvePoint) -> CurvePoint {
        match self {
            SpectralCurve::Rational(r) => r.rho(p),
            SpectralCurve::Hyperelliptic(h) => h.rho(p),
        }
    }

    /// Ramification divisor of λ as (point, multiplicity e−1).
    pub fn ramification_divisor(&self) -> Vec<(CurvePoint, usize)> {
        match self {
            SpectralCurve::Rational(r) => r.ramification_divisor(),
            SpectralCurve::Hyperelliptic(h) => h.ramification_divisor(),
        }
    }

    /// Ramification index of λ at `p`.
    pub fn ramification_index(&self, p: &CurvePoint) -> usize {
        match self {
            SpectralCurve::Rational(r) => r.ramification_index(p),
            SpectralCurve::Hyperelliptic(h) => h.ramification_index(p),
        }
    }

    pub fn is_branch_point(&self, p: &CurvePoint) -> bool {
        self.ramification_index(p) > 1
    }

    /// Value of `ω/dx` at a point, where `x` is `w` (rational) or λ.
    pub fn eval_differential(&self, d: &Differential, p: &CurvePoint) -> Result<C64> {
        match self {
            SpectralCurve::Rational(r) => r.eval_differential(d, p),
            SpectralCurve::Hyperelliptic(h) => h.eval_differential(d, p),
        }
    }

    /// `conj(ρ^*ω)/dx` at `p`.
    pub fn eval_rho_conj(&self, d: &Differential, p: &CurvePoint) -> Result<C64> {
        let q = self.rho(p);
        let v = self.eval_differential(d, &q)?;
        let x = p.x().ok_or_else(|| Error::Input("sample point at infinity".into()))?;
        // x∘ρ = 1/conj(x) for both models, so d(x∘ρ) = −conj(dx)/conj(x)².
        Ok(-v.conj() / (x * x))
    }

    /// A deterministic set of regular sample points away from poles of `diffs`.
    pub fn sample_points(&self, count: usize) -> Vec<CurvePoint> {
        let mut out = Vec::new();
        let mut i = 0usize;
        while out.len() < count && i < 20 * count + 20 {
            i += 1;
            let t = i as f64;
            let r = 0.55 + 0.8 * ((t * 0.618_033_988_75).fract());
            let a = 2.0 * std::f64::consts::PI * ((t * 0.414_213_562_37).fract());
            let x = C64::from_polar(r, a);
            let p = match self {
                SpectralCurve::Rational(_) => CurvePoint::w(x),
                SpectralCurve::Hyperelliptic(h) => {
                    if h.near_branch(x, 1e-3) {
                        continue;
                    }
                    CurvePoint::at(x, if i.is_multiple_of(2) { 1 } else { -1 })
                }
            };
            out.push(p);
        }
        out
    }

    /// Checks for the reality conditions on the curve.
    pub fn validate_real_structure(&self, tol: &Tolerances) -> ValidationReport {
        match self {
            SpectralCurve::Rational(r) => r.validate(tol),
            SpectralCurve::Hyperelliptic(h) => h.validate(tol),
        }
    }

    /// Holomorphic basis followed by one elementary third-kind differential per pair.
    pub fn differential_basis(&self, pairs: &[(CurvePoint, CurvePoint)]) -> Result<Vec<Differential>> {
        let g = self.genus();
        let mut out = Vec::new();
        for i in 0..g {
            let mut hol = vec![ZERO; g];
            hol[i] = C64::new(1.0, 0.0);
            out.push(Differential::holomorphic(hol));
        }
        for (p, q) in pairs {
            for pt in [p, q] {
                if self.is_branch_point(pt) {
                    return Err(Error::Unsupported(format!("third-kind pole {pt} is a branch point")));
                }
                if matches!(pt, CurvePoint::Infinity { .. }) && !self.is_rational() {
                    return Err(Error::Unsupported("third-kind pole at infinity".into()));
                }
            }
            if p.close_to(q, 1e-12) {
                return Err(Error::Unsupported("third-kind pole pair coincides".into()));
            }
            out.push(Differential::third_kind(*p, *q));
        }
        Ok(out)
    }

    /// Residue of `d` at `p`, by a numeric circle integral in the local
    /// coordinate.
    pub fn numeric_residue(&self, d: &Differential, p: &CurvePoint) -> Result<C64> {
        let x0 = p.x().ok_or_else(|| Error::Input("residue at infinity".into()))?;
        let r = 1e-3 * (1.0 + x0.norm());
        let n = 256;
        let mut acc = ZERO;
        for k in 0..n {
            let th = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
            let e = C64::from_polar(1.0, th);
            let x = x0 + e * r;
            let q = match self {
                SpectralCurve::Rational(_) => CurvePoint::w(x),
                SpectralCurve::Hyperelliptic(h) => h.continue_point(p, x),
            };
            acc += self.eval_differential(d, &q)? * e * r * C64::new(0.0, 1.0);
        }
        Ok(acc * (2.0 * std::f64::consts::PI / n as f64) / C64::new(0.0, 2.0 * std::f64::consts::PI))
    }

    /// Abel map `∫_base^target` of each differential.
    pub fn abel_map(&self, diffs: &[Differential], base: &CurvePoint, target: &CurvePoint) -> Result<CVector> {
        for d in diffs {
            if let Some((p, q)) = &d.poles {
                for pole in [p, q] {
                    if pole.close_to(target, 1e-12) || pole.close_to(base, 1e-12) {
                        return Err(Error::Divergent(format!("endpoint {pole} is a pole")));
                    }
                }
            }
        }
        if base.close_to(target, 0.0) {
            return Ok(CVector::zeros(diffs.len()));
        }
        let v = match self {
            SpectralCurve::Rational(r) => r.abel(diffs, base, target)?,
            SpectralCurve::Hyperelliptic(h) => h.abel(diffs, base, target)?,
        };
        Ok(CVector::from_vec(v))
    }

    /// Periods, normalized differentials and the generalized lattice.
    pub fn period_lattice(&self, diffs: &[Differential], tol: &Tolerances) -> Result<PeriodData> {
        let data = match self {
            SpectralCurve::Rational(_) => rational::periods(diffs)?,
            SpectralCurve::Hyperelliptic(h) => h.periods(diffs, tol)?,
        };
        let mut data = data;
        let (c, resid) = self.real_involution(&data.normalized)?;
        data.real_structure_residual = resid;
        data.lattice.real_involution = c;
        Ok(data)
    }

    /// Matrix `C` with `conj(ρ^*ν_i) = Σ_j C_ij ν_j`, fitted by least squares
    /// on sample points, and the fit residual.
    pub fn real_involution(&self, basis: &[Differential]) -> Result<(CMatrix, f64)> {
        let d = basis.len();
        if d == 0 {
            return Ok((CMatrix::zeros(0, 0), 0.0));
        }
        let pts: Vec<CurvePoint> = self
            .sample_points(4 * d + 8)
            .into_iter()
            .filter(|p| {
                basis.iter().all(|b| match &b.poles {
                    Some((u, v)) => {
                        let far = |a: &CurvePoint| match (a.x(), p.x()) {
                            (Some(s), Some(t)) => (s - t).norm() > 0.05 && (1.0 / s.conj() - t).norm() > 0.05,
                            _ => true,
                        };
                        far(u) && far(v)
                    }
                    None => true,
                })
            })
            .collect();
        let mut m = CMatrix::zeros(pts.len(), d);
        let mut b = CMatrix::zeros(pts.len(), d);
        for (k, p) in pts.iter().enumerate() {
            for (j, w) in basis.iter().enumerate() {
                m[(k, j)] = self.eval_differential(w, p)?;
                b[(k, j)] = self.eval_rho_conj(w, p)?;
            }
        }
        let (x, _) = lstsq(&m, &b);
        let scale = b.norm().max(1e-300);
        let resid = (&m * &x - &b).norm() / scale;
        Ok((x.transpose(), resid))
    }

    /// `U_j[i] = (ω_i/dζ_j)(P_j)` with ζ = λ^{1/e} at a zero of index e.
    pub fn direction_vector(&self, basis: &[Differential], p: &CurvePoint, index: usize) -> Result<CVector> {
        let e = self.ramification_index(p);
        if e != index {
            return Err(Error::Parameter(format!(
                "local parameter at {p} expects ramification index {index}, found {e}"
            )));
        }
        let v: Result<Vec<C64>> = match self {
            SpectralCurve::Rational(r) => basis.iter().map(|d| r.eval_in_zeta(d, p, e)).collect(),
            SpectralCurve::Hyperelliptic(h) => basis.iter().map(|d| h.eval_in_zeta(d, p, e)).collect(),
        };
        Ok(CVector::from_vec(v?))
    }
}

/// Period data of a curve together with its generalized lattice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodData {
    pub a_periods: CMatrix,
    pub b_periods: CMatrix,
    pub tau: CMatrix,
    /// b-periods of the normalized third-kind differentials, one row per pair.
    pub augmented_rows: CMatrix,
    /// Normalized basis: g holomorphic then n third-kind.
    pub normalized: Vec<Differential>,
    pub lattice: GeneralizedLattice,
    /// Largest disagreement between the two contour families.
    pub deformation_defect: f64,
    pub symmetry_defect: f64,
    pub real_structure_residual: f64,
}
