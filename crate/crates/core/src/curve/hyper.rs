use std::f64::consts::PI;

use super::{CurvePoint, Differential, DifferentialKind, PeriodData};
use crate::error::{Error, Result};
use crate::genjac::GeneralizedLattice;
use crate::linalg::{gauss_legendre, C64, CMatrix, ONE, ZERO};
use crate::report::ValidationReport;
use crate::tol::Tolerances;

const PANELS: usize = 48;
const NODES: usize = 12;

/// `y² = ∏(λ − e_i)` with an optional branch point at infinity.
///
/// Finite branch points are kept sorted by real part, then imaginary part.
/// Cuts join consecutive pairs; with a branch point at infinity the last
/// finite point is joined to infinity by a ray towards +∞.
#[derive(Clone, Debug)]
pub struct HyperellipticCurve {
    finite: Vec<C64>,
    infinity: bool,
    genus: usize,
    rho: Option<RhoData>,
}

#[derive(Clone, Copy, Debug)]
struct RhoData {
    k: C64,
    pow: i32,
    sign: f64,
}

#[derive(Clone, Copy, Debug)]
enum End {
    Regular(C64, C64),
    Branch(C64),
    Inf(i8),
}

/// Loop integrals of a set of differentials around the chain cycles.
#[derive(Clone, Debug)]
pub struct LoopIntegrals {
    /// `values[(i, j)]`: differential `i` around chain cycle `j`.
    pub values: CMatrix,
    /// Same loops along a second, deformed contour.
    pub deformed: CMatrix,
}

impl HyperellipticCurve {
    pub fn new(mut finite: Vec<C64>, infinity: bool) -> Result<Self> {
        let total = finite.len() + usize::from(infinity);
        if total % 2 == 1 {
            return Err(Error::Structural(format!("odd number of branch points ({total})")));
        }
        if total < 4 {
            return Err(Error::Structural("hyperelliptic curve needs at least four branch points".into()));
        }
        if finite.iter().any(|e| !e.is_finite()) {
            return Err(Error::Structural("non-finite branch point".into()));
        }
        finite.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        for w in finite.windows(2) {
            if (w[0] - w[1]).norm() < 1e-12 {
                return Err(Error::Structural(format!("repeated branch point {}", w[0])));
            }
        }
        let mut curve = HyperellipticCurve { finite, infinity, genus: total / 2 - 1, rho: None };
        curve.rho = curve.fit_rho();
        Ok(curve)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn branch_points(&self) -> &[C64] {
        &self.finite
    }

    pub fn has_infinite_branch(&self) -> bool {
        self.infinity
    }

    fn is_branch_value(&self, x: C64) -> Option<C64> {
        self.finite.iter().copied().find(|e| (e - x).norm() <= 1e-12 * (1.0 + e.norm()))
    }

    pub fn near_branch(&self, x: C64, tol: f64) -> bool {
        self.finite.iter().any(|e| (e - x).norm() < tol)
    }

    /// The fixed branch of `y` with cuts along the chosen segments.
    pub fn y_principal(&self, l: C64) -> C64 {
        let n = self.finite.len();
        let mut y = ONE;
        let mut i = 0;
        while i + 1 < n {
            let (a, b) = (self.finite[i], self.finite[i + 1]);
            if l == a {
                return ZERO;
            }
            y *= (l - a) * ((l - b) / (l - a)).sqrt();
            i += 2;
        }
        if i < n {
            let e = self.finite[i];
            y *= C64::new(0.0, 1.0) * (e - l).sqrt();
        }
        y
    }

    pub fn y_squared(&self, l: C64) -> C64 {
        self.finite.iter().fold(ONE, |acc, e| acc * (l - e))
    }

    pub fn y_at(&self, p: &CurvePoint) -> Option<C64> {
        match p {
            CurvePoint::Finite { x, sheet } => Some(self.y_principal(*x) * *sheet as f64),
            CurvePoint::Infinity { .. } => None,
        }
    }

    pub fn point_from(&self, l: C64, y: C64) -> CurvePoint {
        if self.is_branch_value(l).is_some() {
            return CurvePoint::at(l, 0);
        }
        let yp = self.y_principal(l);
        CurvePoint::at(l, if (y - yp).norm() <= (y + yp).norm() { 1 } else { -1 })
    }

    /// Point over `x` on the sheet continuing from `p`.
    pub fn continue_point(&self, p: &CurvePoint, x: C64) -> CurvePoint {
        match self.y_at(p) {
            Some(y) if p.sheet() != 0 => self.point_from(x, y),
            _ => self.point_from(x, self.y_principal(x)),
        }
    }

    pub fn fiber(&self, value: C64) -> Vec<(CurvePoint, usize)> {
        if self.is_branch_value(value).is_some() {
            vec![(CurvePoint::at(value, 0), 2)]
        } else {
            vec![(CurvePoint::at(value, 1), 1), (CurvePoint::at(value, -1), 1)]
        }
    }

    pub fn poles(&self) -> Vec<(CurvePoint, usize)> {
        if self.infinity {
            vec![(CurvePoint::Infinity { sheet: 0 }, 2)]
        } else {
            vec![(CurvePoint::Infinity { sheet: 1 }, 1), (CurvePoint::Infinity { sheet: -1 }, 1)]
        }
    }

    pub fn ramification_index(&self, p: &CurvePoint) -> usize {
        match p {
            CurvePoint::Finite { x, .. } => {
                if self.is_branch_value(*x).is_some() {
                    2
                } else {
                    1
                }
            }
            CurvePoint::Infinity { .. } => {
                if self.infinity {
                    2
                } else {
                    1
                }
            }
        }
    }

    pub fn ramification_divisor(&self) -> Vec<(CurvePoint, usize)> {
        let mut out: Vec<(CurvePoint, usize)> = self.finite.iter().map(|e| (CurvePoint::at(*e, 0), 1)).collect();
        if self.infinity {
            out.push((CurvePoint::Infinity { sheet: 0 }, 1));
        }
        out
    }

    fn fit_rho(&self) -> Option<RhoData> {
        let has_zero = self.finite.iter().any(|e| e.norm() < 1e-14);
        if self.infinity != has_zero {
            return None;
        }
        let mut k2 = ONE;
        for e in &self.finite {
            if e.norm() >= 1e-14 {
                k2 *= -e;
            }
        }
        let k = k2.sqrt();
        let m = self.finite.len() as i32;
        let pow = if self.infinity { (m + 1) / 2 } else { m / 2 };
        let y1 = self.y_principal(ONE);
        if y1.norm() == 0.0 {
            return None;
        }
        let s = y1 / (k * y1.conj());
        Some(RhoData { k, pow, sign: if s.re >= 0.0 { 1.0 } else { -1.0 } })
    }

    fn rho_y(&self, x: C64, y: C64) -> C64 {
        match self.rho {
            Some(r) => r.k * y.conj() * r.sign / x.conj().powi(r.pow),
            None => y.conj(),
        }
    }

    pub fn rho(&self, p: &CurvePoint) -> CurvePoint {
        match p {
            CurvePoint::Finite { x, sheet } => {
                if x.norm() == 0.0 {
                    if self.infinity {
                        return CurvePoint::Infinity { sheet: 0 };
                    }
                    let eps = C64::new(1e-7, 0.0);
                    let q = self.continue_point(p, eps);
                    let y = self.y_at(&q).unwrap_or(ZERO);
                    let far = ONE / eps;
                    let yt = self.rho_y(eps, y);
                    let yp = self.y_principal(far);
                    return CurvePoint::Infinity { sheet: if (yt - yp).norm() <= (yt + yp).norm() { 1 } else { -1 } };
                }
                let img = ONE / x.conj();
                if *sheet == 0 {
                    return CurvePoint::at(img, 0);
                }
                let y = self.y_principal(*x) * *sheet as f64;
                self.point_from(img, self.rho_y(*x, y))
            }
            CurvePoint::Infinity { sheet } => {
                if self.infinity || *sheet == 0 {
                    return CurvePoint::at(ZERO, 0);
                }
                let far = C64::new(1e7, 0.0);
                let y = self.y_principal(far) * *sheet as f64;
                let q = self.point_from(ONE / far, self.rho_y(far, y));
                CurvePoint::at(ZERO, q.sheet())
            }
        }
    }

    pub fn validate(&self, tol: &Tolerances) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let mut wit = Vec::new();
        for e in &self.finite {
            if e.norm() < 1e-14 {
                if !self.infinity {
                    wit.push("0 is a branch point but infinity is not".to_string());
                }
                continue;
            }
            let r = ONE / e.conj();
            if self.is_branch_value(r).is_none() && !self.finite.iter().any(|f| (f - r).norm() <= 1e-9 * (1.0 + r.norm())) {
                wit.push(format!("{e} has no partner {r}"));
            }
        }
        if self.infinity && !self.finite.iter().any(|e| e.norm() < 1e-14) {
            wit.push("infinity is a branch point but 0 is not".to_string());
        }
        rep.push("reciprocal_conjugate", wit.is_empty(), "branch set closed under e ↦ 1/conj(e)", wit);

        let wit: Vec<String> = self
            .finite
            .iter()
            .filter(|e| (e.norm() - 1.0).abs() <= 1e-9)
            .map(|e| format!("branch point {e} lies on |λ|=1"))
            .collect();
        rep.push("unit_circle_unbranched", wit.is_empty(), "no branch point on the unit circle", wit);

        let mut wit = Vec::new();
        if self.rho.is_none() {
            wit.push("no antiholomorphic lift of λ ↦ 1/conj(λ)".to_string());
        } else {
            for k in 0..16 {
                let x = C64::from_polar(1.0, 2.0 * PI * k as f64 / 16.0 + 0.05);
                for s in [1i8, -1] {
                    let p = CurvePoint::at(x, s);
                    let q = self.rho(&p);
                    let y = self.y_at(&p).unwrap_or(ZERO);
                    let yq = self.rho_y(x, y);
                    let defect = (yq - y).norm() / (1.0 + y.norm());
                    if !q.close_to(&p, tol.curve.max(1e-9)) || defect > 1e-8 {
                        wit.push(format!("ρ moves {p} (defect {defect:e})"));
                    }
                }
            }
        }
        rep.push("rho_fixes_unit_fiber", wit.is_empty(), "ρ fixes the fiber over |λ|=1", wit);
        rep
    }

    fn pole_y(&self, p: &CurvePoint) -> Result<(C64, C64)> {
        match p {
            CurvePoint::Finite { x, sheet } if *sheet != 0 => Ok((*x, self.y_principal(*x) * *sheet as f64)),
            _ => Err(Error::Unsupported(format!("third-kind pole {p} must be a regular finite point"))),
        }
    }

    /// `ω/dλ` at `(λ, y)`.
    fn eval_ly(&self, d: &Differential, l: C64, y: C64) -> Result<C64> {
        let mut acc = ZERO;
        let mut pw = ONE;
        for c in &d.hol {
            acc += c * pw;
            pw *= l;
        }
        let mut v = acc / y;
        if let Some((p, q)) = &d.poles {
            let (lp, yp) = self.pole_y(p)?;
            let (lq, yq) = self.pole_y(q)?;
            v += d.weight * ((y + yp) / (l - lp) - (y + yq) / (l - lq)) / (2.0 * y);
        }
        Ok(v)
    }

    /// y-odd part `R` of a differential, `ω = R dλ/y + (y-even)`.
    fn odd_part(&self, d: &Differential, l: C64) -> Result<C64> {
        let mut acc = ZERO;
        let mut pw = ONE;
        for c in &d.hol {
            acc += c * pw;
            pw *= l;
        }
        if let Some((p, q)) = &d.poles {
            let (lp, yp) = self.pole_y(p)?;
            let (lq, yq) = self.pole_y(q)?;
            acc += d.weight * 0.5 * (yp / (l - lp) - yq / (l - lq));
        }
        Ok(acc)
    }

    pub fn eval_differential(&self, d: &Differential, p: &CurvePoint) -> Result<C64> {
        match p {
            CurvePoint::Finite { x, sheet } if *sheet != 0 => self.eval_ly(d, *x, self.y_principal(*x) * *sheet as f64),
            _ => Err(Error::Input(format!("ω/dλ is not finite at {p}"))),
        }
    }

    /// `(ω/dζ)(P)` at a zero of λ with `ζ = λ^{1/e}`.
    pub fn eval_in_zeta(&self, d: &Differential, p: &CurvePoint, e: usize) -> Result<C64> {
        let x = p.x().ok_or_else(|| Error::Parameter("zero of λ at infinity".into()))?;
        if x.norm() > 1e-12 {
            return Err(Error::Parameter(format!("{p} is not a zero of λ")));
        }
        match e {
            1 => self.eval_differential(d, p),
            2 => {
                let g0 = self.finite.iter().filter(|f| f.norm() > 1e-14).fold(ONE, |acc, f| acc * (-f));
                Ok(2.0 * self.odd_part(d, ZERO)? / g0.sqrt())
            }
            _ => Err(Error::Parameter(format!("ramification index {e} on a hyperelliptic curve"))),
        }
    }

    fn end_of(&self, p: &CurvePoint) -> End {
        match p {
            CurvePoint::Finite { x, sheet } => {
                if *sheet == 0 || self.is_branch_value(*x).is_some() {
                    End::Branch(*x)
                } else {
                    End::Regular(*x, self.y_principal(*x) * *sheet as f64)
                }
            }
            CurvePoint::Infinity { sheet } => End::Inf(if self.infinity { 0 } else { *sheet }),
        }
    }

    fn pick(&self, l: C64, prev: C64) -> C64 {
        let y = self.y_principal(l);
        if (y - prev).norm() <= (y + prev).norm() {
            y
        } else {
            -y
        }
    }

    /// Integrate from a regular point to `end`, tracking y. Returns the
    /// integrals with the tracked y and λ at the last node.
    fn inf_direction(&self, l0: C64) -> C64 {
        if self.infinity || l0.norm() <= 1e-3 {
            ONE
        } else {
            l0 / l0.norm()
        }
    }

    fn obstacles(&self, diffs: &[Differential]) -> Vec<C64> {
        let mut out = self.finite.clone();
        for d in diffs {
            if let Some((p, q)) = &d.poles {
                out.extend(p.x());
                out.extend(q.x());
            }
        }
        out
    }

    fn clear_segment(obst: &[C64], a: C64, b: C64) -> bool {
        let len = (b - a).norm();
        obst.iter().all(|o| {
            if (o - a).norm() < 1e-12 || (o - b).norm() < 1e-12 {
                return true;
            }
            let t = (((o - a) * (b - a).conj()).re / (len * len)).clamp(0.0, 1.0);
            (a + (b - a) * t - o).norm() >= 0.1 * len.min(1.0)
        })
    }

    fn clear_ray(obst: &[C64], a: C64, d: C64) -> bool {
        obst.iter().all(|o| {
            if (o - a).norm() < 1e-12 {
                return true;
            }
            let t = ((o - a) * d.conj()).re.max(0.0);
            (a + d * t - o).norm() >= 0.1
        })
    }

    /// Waypoints between `a` and the end so that no branch point or pole lies
    /// close to the path.
    fn route(&self, obst: &[C64], a: C64, end: End, dir: C64) -> Vec<C64> {
        let clear_to_end = |w: C64| match end {
            End::Regular(b, _) | End::Branch(b) => Self::clear_segment(obst, w, b),
            End::Inf(_) => Self::clear_ray(obst, w, dir),
        };
        if clear_to_end(a) {
            return Vec::new();
        }
        let (mid, normal, scale) = match end {
            End::Regular(b, _) | End::Branch(b) => {
                let len = (b - a).norm().max(1e-12);
                ((a + b) * 0.5, (b - a) * C64::new(0.0, 1.0) / len, len)
            }
            End::Inf(_) => (a, dir * C64::new(0.0, 1.0), 1.0 + a.norm()),
        };
        for s in [0.5, -0.5, 0.25, -0.25, 1.0, -1.0, 2.0, -2.0] {
            let w = mid + normal * (s * scale);
            if Self::clear_segment(obst, a, w) && clear_to_end(w) {
                return vec![w];
            }
        }
        Vec::new()
    }

    /// Routed integration from a regular point to `end`.
    fn segment(&self, diffs: &[Differential], l0: C64, y0: C64, end: End) -> Result<(Vec<C64>, C64, C64)> {
        let dir = self.inf_direction(l0);
        let obst = self.obstacles(diffs);
        let mut acc = vec![ZERO; diffs.len()];
        let (mut l, mut y) = (l0, y0);
        for w in self.route(&obst, l0, end, dir) {
            let (part, yl, _) = self.piece(diffs, l, y, End::Regular(w, ZERO), dir)?;
            for (a, p) in acc.iter_mut().zip(part) {
                *a += p;
            }
            y = self.pick(w, yl);
            l = w;
        }
        let (part, y_end, l_end) = self.piece(diffs, l, y, end, dir)?;
        for (a, p) in acc.iter_mut().zip(part) {
            *a += p;
        }
        Ok((acc, y_end, l_end))
    }

    fn piece(&self, diffs: &[Differential], l0: C64, y0: C64, end: End, dir: C64) -> Result<(Vec<C64>, C64, C64)> {
        let (gx, gw) = gauss_legendre(NODES);
        let param = |s: f64| -> (C64, C64) {
            match end {
                End::Regular(b, _) => (l0 + (b - l0) * s, b - l0),
                End::Branch(b) => {
                    let t = 1.0 - s;
                    (l0 + (b - l0) * (1.0 - t * t), (b - l0) * (2.0 * t))
                }
                End::Inf(_) => {
                    let d = dir;
                    let t = 1.0 - s;
                    (l0 + d * (1.0 / (t * t) - 1.0), d * (2.0 / (t * t * t)))
                }
            }
        };
        let mut acc = vec![ZERO; diffs.len()];
        let mut y = y0;
        let mut last = l0;
        for p in 0..PANELS {
            let (a, b) = (p as f64 / PANELS as f64, (p + 1) as f64 / PANELS as f64);
            for k in 0..NODES {
                let s = 0.5 * (a + b) + 0.5 * (b - a) * gx[k];
                let w = 0.5 * (b - a) * gw[k];
                let (l, dl) = param(s);
                y = self.pick(l, y);
                last = l;
                for (i, d) in diffs.iter().enumerate() {
                    acc[i] += self.eval_ly(d, l, y)? * dl * w;
                }
            }
        }
        Ok((acc, y, last))
    }

    fn path_from(&self, diffs: &[Differential], l0: C64, y0: C64, end: End) -> Result<Vec<C64>> {
        let (direct, y_end, l_end) = self.segment(diffs, l0, y0, end)?;
        let ok = match end {
            End::Regular(b, yb) => (self.pick(b, y_end) - yb).norm() <= 1e-6 * (1.0 + yb.norm()),
            End::Branch(_) | End::Inf(0) => true,
            End::Inf(s) => {
                let yp = self.y_principal(l_end);
                let got = if (y_end - yp).norm() <= (y_end + yp).norm() { 1 } else { -1 };
                got == s
            }
        };
        if ok {
            return Ok(direct);
        }
        let e = self
            .finite
            .iter()
            .copied()
            .min_by(|a, b| (a - l0).norm().total_cmp(&(b - l0).norm()))
            .expect("branch points");
        let (i1, _, _) = self.segment(diffs, l0, y0, End::Branch(e))?;
        let (i2, _, _) = self.segment(diffs, l0, -y0, End::Branch(e))?;
        let (i3, _, _) = self.segment(diffs, l0, -y0, end)?;
        Ok((0..diffs.len()).map(|i| i1[i] - i2[i] + i3[i]).collect())
    }

    pub fn abel(&self, diffs: &[Differential], base: &CurvePoint, target: &CurvePoint) -> Result<Vec<C64>> {
        match (self.end_of(base), self.end_of(target)) {
            (End::Regular(l, y), t) => self.path_from(diffs, l, y, t),
            (b, End::Regular(l, y)) => Ok(self.path_from(diffs, l, y, b)?.into_iter().map(|v| -v).collect()),
            (b, t) => {
                let m = self.regular_anchor();
                let y = self.y_principal(m);
                let to_t = self.path_from(diffs, m, y, t)?;
                let to_b = self.path_from(diffs, m, y, b)?;
                Ok((0..diffs.len()).map(|i| to_t[i] - to_b[i]).collect())
            }
        }
    }

    fn regular_anchor(&self) -> C64 {
        let mut best = C64::new(0.37, 0.61);
        let mut dist = 0.0;
        for k in 0..12 {
            let c = C64::from_polar(0.5 + 0.1 * k as f64, 0.9 + 0.7 * k as f64);
            let d = self.finite.iter().map(|e| (e - c).norm()).fold(f64::INFINITY, f64::min);
            if d > dist {
                dist = d;
                best = c;
            }
        }
        best
    }

    fn elliptic_radius(m: C64, h: C64, x: C64) -> f64 {
        let u = (x - m) / h;
        let s = (u * u - ONE).sqrt();
        let v = if (u + s).norm() >= (u - s).norm() { u + s } else { u - s };
        v.norm().ln()
    }

    /// Loop integrals around the chain cycles `c_j` (encircling `[e_j, e_{j+1}]`).
    pub fn chain_loops(&self, diffs: &[Differential]) -> Result<LoopIntegrals> {
        let ncyc = 2 * self.genus;
        let mut values = CMatrix::zeros(diffs.len(), ncyc);
        let mut deformed = CMatrix::zeros(diffs.len(), ncyc);
        let mut poles = Vec::new();
        for d in diffs {
            if let Some((p, q)) = &d.poles {
                poles.extend(p.x());
                poles.extend(q.x());
            }
        }
        for j in 0..ncyc {
            let (a, b) = (self.finite[j], self.finite[j + 1]);
            let (m, h) = ((a + b) * 0.5, (b - a) * 0.5);
            let rmax = self
                .finite
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j && *i != j + 1)
                .map(|(_, e)| Self::elliptic_radius(m, h, *e))
                .fold(2.0f64, f64::min);
            let mut marks = vec![0.0, rmax];
            for p in &poles {
                let r = Self::elliptic_radius(m, h, *p);
                if r < rmax {
                    marks.push(r);
                }
            }
            marks.sort_by(f64::total_cmp);
            let (lo, hi) = marks
                .windows(2)
                .map(|w| (w[0], w[1]))
                .max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0)))
                .unwrap();
            let width = hi - lo;
            if width < 1e-3 {
                return Err(Error::Numeric { msg: format!("no clear contour around cycle {j}"), worst: width });
            }
            let r1 = lo + 0.5 * width;
            let r2 = lo + 0.7 * width;
            let dist = 0.3 * width;
            let n = ((40.0 / dist).ceil() as usize).clamp(128, 16384);
            let v1 = self.ellipse(diffs, m, h, r1, n, j)?;
            let v2 = self.ellipse(diffs, m, h, r2, n, j)?;
            for i in 0..diffs.len() {
                values[(i, j)] = v1[i];
                deformed[(i, j)] = v2[i];
            }
        }
        Ok(LoopIntegrals { values, deformed })
    }

    fn ellipse(&self, diffs: &[Differential], m: C64, h: C64, r: f64, n: usize, j: usize) -> Result<Vec<C64>> {
        let mut acc = vec![ZERO; diffs.len()];
        let arg = |th: f64| C64::new(th, -r);
        let l0 = m + h * arg(0.0).cos();
        let y0 = self.y_principal(l0);
        let mut y = y0;
        for k in 0..n {
            let th = 2.0 * PI * k as f64 / n as f64;
            let l = m + h * arg(th).cos();
            let dl = -h * arg(th).sin();
            y = self.pick(l, y);
            for (i, d) in diffs.iter().enumerate() {
                acc[i] += self.eval_ly(d, l, y)? * dl;
            }
        }
        let yl = self.pick(l0, y);
        if (yl - y0).norm() > 1e-6 * (1.0 + y0.norm()) {
            return Err(Error::Numeric { msg: format!("branch tracking failed on cycle {j}"), worst: (yl - y0).norm() });
        }
        let w = 2.0 * PI / n as f64;
        Ok(acc.into_iter().map(|v| v * w).collect())
    }

    /// Gauss–Chebyshev value of `2∫_{e_j}^{e_{j+1}} R dλ/y` for the y-odd part
    /// of each differential. Equals ± the loop integral around `c_j` when no
    /// third-kind pole sits on the segment.
    pub fn chebyshev_loop(&self, diffs: &[Differential], j: usize, n: usize) -> Result<Vec<C64>> {
        let (a, b) = (self.finite[j], self.finite[j + 1]);
        let (m, h) = ((a + b) * 0.5, (b - a) * 0.5);
        let others: Vec<C64> = self.finite.iter().enumerate().filter(|(i, _)| *i != j && *i != j + 1).map(|(_, e)| *e).collect();
        let rest2 = |l: C64| others.iter().fold(ONE, |acc, e| acc * (l - e));
        let mut nodes: Vec<(f64, C64)> = (1..=n)
            .map(|k| {
                let t = ((2 * k - 1) as f64 * PI / (2 * n) as f64).cos();
                (t, m + h * t)
            })
            .collect();
        nodes.sort_by(|x, y| x.0.abs().total_cmp(&y.0.abs()));
        let mut acc = vec![ZERO; diffs.len()];
        let mut ys: Vec<(f64, C64)> = Vec::new();
        for (t, l) in nodes {
            let root = rest2(l).sqrt();
            let prev = ys
                .iter()
                .filter(|(s, _)| s.signum() == t.signum() || ys.len() == 1)
                .min_by(|x, y| (x.0 - t).abs().total_cmp(&(y.0 - t).abs()))
                .map(|p| p.1);
            let yr = match prev {
                Some(p) if (root - p).norm() > (root + p).norm() => -root,
                _ => root,
            };
            ys.push((t, yr));
            for (i, d) in diffs.iter().enumerate() {
                acc[i] += self.odd_part(d, l)? / (C64::new(0.0, 1.0) * yr);
            }
        }
        let w = PI / n as f64;
        Ok(acc.into_iter().map(|v| v * (2.0 * w)).collect())
    }

    pub fn periods(&self, diffs: &[Differential], tol: &Tolerances) -> Result<PeriodData> {
        let g = self.genus;
        if diffs.len() < g || diffs[..g].iter().any(|d| d.kind != DifferentialKind::Holomorphic) {
            return Err(Error::Structural("differential list must start with the holomorphic basis".into()));
        }
        let nthird = diffs.len() - g;
        let loops = self.chain_loops(diffs)?;
        let cm = &loops.values;
        let mut deform = 0.0f64;
        for (x, y) in loops.values.iter().zip(loops.deformed.iter()) {
            deform = deform.max((x - y).norm());
        }

        let build = |signs: &[f64]| -> (CMatrix, CMatrix) {
            let mut a = CMatrix::zeros(diffs.len(), g);
            let mut b = CMatrix::zeros(diffs.len(), g);
            for i in 0..diffs.len() {
                for k in 0..g {
                    a[(i, k)] = cm[(i, 2 * k)] * signs[2 * k];
                    let mut s = ZERO;
                    for l in k..g {
                        s += cm[(i, 2 * l + 1)] * signs[2 * l + 1];
                    }
                    b[(i, k)] = s;
                }
            }
            (a, b)
        };
        let mut best: Option<(f64, Vec<f64>, CMatrix)> = None;
        for mask in 0..(1u32 << (2 * g)) {
            let signs: Vec<f64> = (0..2 * g).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let (a, b) = build(&signs);
            let ah = a.rows(0, g).into_owned();
            let bh = b.rows(0, g).into_owned();
            let Some(inv) = ah.clone().try_inverse() else { continue };
            let tau = &inv * &bh;
            let asym = (&tau - tau.transpose()).norm();
            let im = (tau.map(|z| z.im) + tau.map(|z| z.im).transpose()) * 0.5;
            let min_eig = im.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
            if min_eig <= 0.0 {
                continue;
            }
            if best.as_ref().is_none_or(|(s, _, _)| asym < *s - 1e-12) {
                best = Some((asym, signs, tau));
            }
        }
        let Some((asym, signs, tau)) = best else {
            return Err(Error::Numeric { msg: "no orientation gives Im τ positive definite".into(), worst: f64::INFINITY });
        };
        if asym > tol.period * (1.0 + tau.norm()) {
            return Err(Error::Numeric { msg: "Riemann relations fail".into(), worst: asym });
        }
        let (a, b) = build(&signs);
        let ah = a.rows(0, g).into_owned();
        let bh = b.rows(0, g).into_owned();
        let inv = ah.clone().try_inverse().expect("checked above");

        let mut normalized = Vec::with_capacity(diffs.len());
        for k in 0..g {
            let mut hol = vec![ZERO; g];
            for i in 0..g {
                for (c, v) in diffs[i].hol.iter().enumerate() {
                    hol[c] += inv[(k, i)] * v;
                }
            }
            normalized.push(Differential::holomorphic(hol));
        }
        let mut aug = CMatrix::zeros(nthird, g);
        for l in 0..nthird {
            let row = g + l;
            let mut nu = diffs[row].clone();
            for k in 0..g {
                nu = nu.add_scaled(&normalized[k], -a[(row, k)]);
            }
            for j in 0..g {
                let mut v = b[(row, j)];
                for k in 0..g {
                    v -= a[(row, k)] * tau[(k, j)];
                }
                aug[(l, j)] = v;
            }
            normalized.push(nu);
        }

        let dim = g + nthird;
        let mut gens = CMatrix::zeros(dim, 2 * g + nthird);
        for j in 0..g {
            gens[(j, j)] = ONE;
            for k in 0..g {
                gens[(k, g + j)] = tau[(k, j)];
            }
            for l in 0..nthird {
                gens[(g + l, g + j)] = aug[(l, j)];
            }
        }
        for l in 0..nthird {
            gens[(g + l, 2 * g + l)] = C64::new(0.0, 2.0 * PI);
        }
        Ok(PeriodData {
            a_periods: ah,
            b_periods: bh,
            tau,
            augmented_rows: aug,
            normalized,
            lattice: GeneralizedLattice::new(gens, g, nthird),
            deformation_defect: deform,
            symmetry_defect: asym,
            real_structure_residual: 0.0,
        })
    }
}
