use super::{CurvePoint, Differential, PeriodData};
use crate::error::{Error, Result};
use crate::genjac::GeneralizedLattice;
use crate::linalg::{cluster, C64, CMatrix, Poly, ONE, ZERO};
use crate::report::ValidationReport;
use crate::tol::Tolerances;

const ROOT_CLUSTER: f64 = 1e-5;

/// Genus-0 curve: the sphere with coordinate `w` and `λ = p(w)/q(w)`.
#[derive(Clone, Debug)]
pub struct RationalCurve {
    pub p: Poly,
    pub q: Poly,
    degree: usize,
}

impl RationalCurve {
    pub fn new(p: Poly, q: Poly) -> Result<Self> {
        if p.is_zero() || q.is_zero() {
            return Err(Error::Structural("λ has a zero numerator or denominator".into()));
        }
        let degree = p.degree().max(q.degree());
        if degree == 0 {
            return Err(Error::Structural("λ is constant".into()));
        }
        let scale = |v: &Poly| v.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let (sp, sq) = (scale(&p), scale(&q));
        for r in p.roots() {
            if q.eval(r).norm() <= 1e-9 * sq * (1.0 + r.norm()).powi(q.degree() as i32) {
                return Err(Error::Structural(format!(
                    "numerator and denominator share the root {r}"
                )));
            }
        }
        let _ = sp;
        Ok(RationalCurve { p, q, degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn lambda_w(&self, w: C64) -> C64 {
        self.p.eval(w) / self.q.eval(w)
    }

    /// λ at infinity; `None` when infinity is a pole.
    fn lambda_inf(&self) -> Option<C64> {
        let (dp, dq) = (self.p.degree(), self.q.degree());
        if dp > dq {
            None
        } else if dp == dq {
            Some(self.p.leading() / self.q.leading())
        } else {
            Some(ZERO)
        }
    }

    pub fn lambda_at(&self, pt: &CurvePoint) -> Option<C64> {
        match pt {
            CurvePoint::Finite { x, .. } => {
                let qv = self.q.eval(*x);
                if qv.norm() < 1e-300 {
                    None
                } else {
                    Some(self.p.eval(*x) / qv)
                }
            }
            CurvePoint::Infinity { .. } => self.lambda_inf(),
        }
    }

    fn points_of(&self, r: &Poly) -> Vec<(CurvePoint, usize)> {
        let mut out: Vec<(CurvePoint, usize)> = cluster(&r.roots(), ROOT_CLUSTER)
            .into_iter()
            .map(|(w, m)| (CurvePoint::w(w), m))
            .collect();
        let lost = self.degree - r.degree();
        if lost > 0 {
            out.push((CurvePoint::Infinity { sheet: 0 }, lost));
        }
        out
    }

    pub fn fiber(&self, value: C64) -> Vec<(CurvePoint, usize)> {
        let r = self.p.add(&self.q.scale(-value));
        self.points_of(&r)
    }

    pub fn poles(&self) -> Vec<(CurvePoint, usize)> {
        self.points_of(&self.q)
    }

    pub fn rho(&self, pt: &CurvePoint) -> CurvePoint {
        match pt {
            CurvePoint::Finite { x, .. } if x.norm() == 0.0 => CurvePoint::Infinity { sheet: 0 },
            CurvePoint::Finite { x, .. } => CurvePoint::w(ONE / x.conj()),
            CurvePoint::Infinity { .. } => CurvePoint::w(ZERO),
        }
    }

    fn vanishing_order(poly: &Poly, w: C64) -> usize {
        let scale = poly.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max) * (1.0 + w.norm()).powi(poly.degree() as i32);
        let mut d = poly.clone();
        let mut fact = 1.0;
        for k in 0..=poly.degree() {
            if k > 0 {
                fact *= k as f64;
            }
            if d.eval(w).norm() / fact > 1e-7 * scale {
                return k;
            }
            d = d.derivative();
        }
        poly.degree()
    }

    pub fn ramification_index(&self, pt: &CurvePoint) -> usize {
        match pt {
            CurvePoint::Infinity { .. } => match self.lambda_inf() {
                None => self.p.degree() - self.q.degree(),
                Some(v) => self.degree - self.p.add(&self.q.scale(-v)).degree(),
            },
            CurvePoint::Finite { x, .. } => {
                if self.q.eval(*x).norm() <= 1e-12 * (1.0 + self.q.eval(*x).norm()) {
                    Self::vanishing_order(&self.q, *x).max(1)
                } else {
                    let v = self.lambda_w(*x);
                    Self::vanishing_order(&self.p.add(&self.q.scale(-v)), *x).max(1)
                }
            }
        }
    }

    fn wronskian(&self) -> Poly {
        self.p.derivative().mul(&self.q).add(&self.p.mul(&self.q.derivative()).scale(-ONE))
    }

    pub fn ramification_divisor(&self) -> Vec<(CurvePoint, usize)> {
        let w = self.wronskian();
        let mut out = Vec::new();
        for (r, _) in cluster(&w.roots(), ROOT_CLUSTER) {
            let pt = CurvePoint::w(r);
            let e = self.ramification_index(&pt);
            if e > 1 {
                out.push((pt, e - 1));
            }
        }
        let inf = CurvePoint::Infinity { sheet: 0 };
        let e = self.ramification_index(&inf);
        if e > 1 {
            out.push((inf, e - 1));
        }
        out
    }

    /// Critical values of λ (finite ones).
    pub fn critical_values(&self) -> Vec<C64> {
        let mut out: Vec<C64> = self
            .ramification_divisor()
            .iter()
            .filter_map(|(pt, _)| self.lambda_at(pt))
            .collect();
        out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        out
    }

    pub fn validate(&self, tol: &Tolerances) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let mut worst = 0.0f64;
        let mut wit = Vec::new();
        for k in 0..24 {
            let w = C64::from_polar(0.3 + 0.15 * k as f64, 0.7 + 1.3 * k as f64);
            let a = self.lambda_w(w);
            let b = self.lambda_w(ONE / w.conj());
            if !a.is_finite() || !b.is_finite() || a.norm() < 1e-8 || b.norm() < 1e-8 {
                continue;
            }
            let d = (b * a.conj() - ONE).norm();
            if d > worst {
                worst = d;
            }
            if d > 1e-8 {
                wit.push(format!("w={w}: λ(ρw)·conj(λ(w)) − 1 = {d:e}"));
            }
        }
        rep.push("reciprocal_conjugate", wit.is_empty(), format!("max defect {worst:e}"), wit);

        let mut wit = Vec::new();
        for v in self.critical_values() {
            if (v.norm() - 1.0).abs() <= 1e-6 {
                wit.push(format!("critical value {v} on |λ|=1"));
            }
        }
        rep.push("unit_circle_unbranched", wit.is_empty(), "critical values of λ", wit);

        let mut wit = Vec::new();
        for k in 0..16 {
            let c = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 16.0 + 0.1);
            for (pt, _) in self.fiber(c) {
                match pt.x() {
                    Some(w) if (w.norm() - 1.0).abs() <= tol.curve.max(1e-8) => {}
                    _ => wit.push(format!("fiber point {pt} over λ={c} not fixed by ρ")),
                }
            }
        }
        rep.push("rho_fixes_unit_fiber", wit.is_empty(), "fiber over |λ|=1 lies on |w|=1", wit);
        rep
    }

    pub fn eval_differential(&self, d: &Differential, pt: &CurvePoint) -> Result<C64> {
        if d.hol.iter().any(|h| h.norm() > 0.0) {
            return Err(Error::Structural("holomorphic differentials on a genus-0 curve".into()));
        }
        let w = pt.x().ok_or_else(|| Error::Input("differential evaluated at w=∞".into()))?;
        let Some((a, b)) = &d.poles else { return Ok(ZERO) };
        let term = |p: &CurvePoint| match p.x() {
            Some(x) => ONE / (w - x),
            None => ZERO,
        };
        Ok(d.weight * (term(a) - term(b)))
    }

    pub fn abel(&self, diffs: &[Differential], base: &CurvePoint, target: &CurvePoint) -> Result<Vec<C64>> {
        let prim = |pt: &CurvePoint, a: &CurvePoint, b: &CurvePoint| -> C64 {
            match (pt.x(), a.x(), b.x()) {
                (Some(w), Some(x), Some(y)) => ((w - x) / (w - y)).ln(),
                (Some(w), Some(x), None) => (w - x).ln(),
                (Some(w), None, Some(y)) => -(w - y).ln(),
                (None, _, _) => ZERO,
                (Some(_), None, None) => ZERO,
            }
        };
        diffs
            .iter()
            .map(|d| {
                if d.hol.iter().any(|h| h.norm() > 0.0) {
                    return Err(Error::Structural("holomorphic differentials on a genus-0 curve".into()));
                }
                let Some((a, b)) = &d.poles else { return Ok(ZERO) };
                let v = match (base.x(), target.x(), a.x(), b.x()) {
                    (Some(s), Some(t), Some(x), Some(y)) => ((t - x) / (s - x)).ln() - ((t - y) / (s - y)).ln(),
                    _ => prim(target, a, b) - prim(base, a, b),
                };
                Ok(d.weight * v)
            })
            .collect()
    }

    /// `(ω/dζ)(P)` with `ζ = λ^{1/e}` near a zero `P` of index `e`.
    pub fn eval_in_zeta(&self, d: &Differential, pt: &CurvePoint, e: usize) -> Result<C64> {
        let a = self.zeta_scale(pt, e)?;
        Ok(self.eval_differential(d, pt)? / a)
    }

    /// `dζ/dw` at a zero of λ of index `e` (principal `e`-th root of the
    /// leading Taylor coefficient).
    pub fn zeta_scale(&self, pt: &CurvePoint, e: usize) -> Result<C64> {
        let w = pt.x().ok_or_else(|| Error::Unsupported("zero of λ at w=∞".into()))?;
        let mut d = self.p.clone();
        let mut fact = 1.0;
        for k in 1..=e {
            d = d.derivative();
            fact *= k as f64;
        }
        let lead = d.eval(w) / fact / self.q.eval(w);
        if lead.norm() == 0.0 {
            return Err(Error::Parameter(format!("λ vanishes beyond order {e} at {pt}")));
        }
        Ok(lead.powf(1.0 / e as f64))
    }
}

pub(super) fn periods(diffs: &[Differential]) -> Result<PeriodData> {
    let n = diffs.len();
    let mut gens = CMatrix::zeros(n, n);
    for l in 0..n {
        gens[(l, l)] = C64::new(0.0, 2.0 * std::f64::consts::PI);
    }
    Ok(PeriodData {
        a_periods: CMatrix::zeros(0, 0),
        b_periods: CMatrix::zeros(0, 0),
        tau: CMatrix::zeros(0, 0),
        augmented_rows: CMatrix::zeros(n, 0),
        normalized: diffs.to_vec(),
        lattice: GeneralizedLattice::new(gens, 0, n),
        deformation_defect: 0.0,
        symmetry_defect: 0.0,
        real_structure_residual: 0.0,
    })
}
