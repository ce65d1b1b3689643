//! Spectral data: line-bundle divisor, marked points, reality checks,
//! section spaces and the Hermitian form on Γ(𝓛).

use serde::{Deserialize, Serialize};

use crate::curve::{CurvePoint, RationalCurve, SpectralCurve};
use crate::error::{Error, Result};
use crate::linalg::{null_space, orthonormalize, rank, C64, CMatrix, CVector, Poly, ONE, ZERO};
use crate::report::ValidationReport;
use crate::tol::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Grassmannian,
    ProjectiveUnitary,
}

pub type Divisor = Vec<(CurvePoint, i32)>;

pub fn degree(d: &Divisor) -> i32 {
    d.iter().map(|(_, m)| m).sum()
}

fn add_point(d: &mut Divisor, p: CurvePoint, m: i32) {
    if let Some(slot) = d.iter_mut().find(|(q, _)| q.close_to(&p, 1e-9)) {
        slot.1 += m;
    } else {
        d.push((p, m));
    }
    d.retain(|(_, m)| *m != 0);
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkedPoints {
    /// Points over λ = 1.
    pub o: Vec<CurvePoint>,
    /// Points over λ = −1.
    pub s: Vec<CurvePoint>,
    /// Designated zeros of λ and their ramification indices.
    pub p: Vec<CurvePoint>,
    pub p_index: Vec<usize>,
    /// `Q_m = ρ(P_m)`.
    pub q: Vec<CurvePoint>,
    pub r: Divisor,
    pub d_inf: Divisor,
    pub d_0: Divisor,
}

#[derive(Clone, Debug)]
pub struct SpectralData {
    pub curve: SpectralCurve,
    pub line_divisor: Divisor,
    pub k: usize,
    pub target: Target,
    pub marked: MarkedPoints,
    pub form_scale: f64,
    /// e.g. "conformal direction" for zeros of index above two.
    pub flags: Vec<String>,
}

fn point_key(p: &CurvePoint) -> (i32, f64, f64, i32) {
    match p {
        CurvePoint::Finite { x, sheet } => {
            let mut a = x.arg();
            if a < -1e-12 {
                a += 2.0 * std::f64::consts::PI;
            }
            (0, a.max(0.0), x.norm(), -(*sheet as i32))
        }
        CurvePoint::Infinity { sheet } => (1, 0.0, 0.0, -(*sheet as i32)),
    }
}

/// Deterministic order: finite points by argument in [0, 2π), then modulus,
/// then sheet; infinity last.
pub fn point_cmp(a: &CurvePoint, b: &CurvePoint) -> std::cmp::Ordering {
    let (ka, kb) = (point_key(a), point_key(b));
    ka.0.cmp(&kb.0)
        .then(ka.1.total_cmp(&kb.1))
        .then(ka.2.total_cmp(&kb.2))
        .then(ka.3.cmp(&kb.3))
}

fn sort_points(pts: &mut [CurvePoint]) {
    pts.sort_by(point_cmp);
}

impl SpectralData {
    /// Builds the marked points. `designated` selects the zeros `P_m`; by
    /// default the first `k` zeros of the required ramification type.
    pub fn new(
        curve: SpectralCurve,
        line_divisor: Divisor,
        k: usize,
        target: Target,
        designated: Option<Vec<CurvePoint>>,
        form_scale: f64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Structural("k must be positive".into()));
        }
        if form_scale.is_nan() || form_scale <= 0.0 {
            return Err(Error::Structural("form scale must be positive".into()));
        }
        let n = curve.degree() - 1;
        if target == Target::Grassmannian && k > n {
            return Err(Error::Structural(format!("k = {k} exceeds n = {n}")));
        }
        let mut o: Vec<CurvePoint> = curve.fiber(ONE).into_iter().map(|(p, _)| p).collect();
        let mut s: Vec<CurvePoint> = curve.fiber(-ONE).into_iter().map(|(p, _)| p).collect();
        sort_points(&mut o);
        sort_points(&mut s);
        let mut zeros = curve.zeros();
        zeros.sort_by(|a, b| point_cmp(&a.0, &b.0));
        let p: Vec<CurvePoint> = match designated {
            Some(v) => v,
            None => {
                let want = |e: usize| match target {
                    Target::Grassmannian => e >= 2,
                    Target::ProjectiveUnitary => e == 1,
                };
                zeros.iter().filter(|(_, e)| want(*e)).take(k).map(|(p, _)| *p).collect()
            }
        };
        if p.len() != k {
            return Err(Error::Structural(format!("found {} designated zeros of λ, need {k}", p.len())));
        }
        let p_index: Vec<usize> = p.iter().map(|x| curve.ramification_index(x)).collect();
        for x in &p {
            if curve.lambda(x).is_none_or(|v| v.norm() > 1e-9) {
                return Err(Error::Structural(format!("designated point {x} is not a zero of λ")));
            }
        }
        let q: Vec<CurvePoint> = p.iter().map(|x| curve.rho(x)).collect();
        let r: Divisor = curve.ramification_divisor().into_iter().map(|(x, m)| (x, m as i32)).collect();
        let mut d_inf: Divisor = curve.poles().into_iter().map(|(x, m)| (x, m as i32)).collect();
        let mut d_0: Divisor = curve.zeros().into_iter().map(|(x, m)| (x, m as i32)).collect();
        if target == Target::Grassmannian {
            for (qm, pm) in q.iter().zip(&p) {
                add_point(&mut d_inf, *qm, -1);
                add_point(&mut d_0, *pm, -1);
            }
        }
        let mut flags = Vec::new();
        for (x, e) in p.iter().zip(&p_index) {
            if target == Target::Grassmannian && *e > 2 {
                flags.push(format!("conformal direction at {x} (index {e})"));
            }
        }
        Ok(SpectralData {
            curve,
            line_divisor,
            k,
            target,
            marked: MarkedPoints { o, s, p, p_index, q, r, d_inf, d_0 },
            form_scale,
            flags,
        })
    }

    pub fn n(&self) -> usize {
        self.curve.degree() - 1
    }

    fn rational(&self) -> Result<&RationalCurve> {
        self.curve
            .as_rational()
            .ok_or_else(|| Error::Unsupported("operation implemented for genus-0 curves".into()))
    }

    /// Γ(𝓛) for 𝓛 = O(D) on the sphere: `s = P(w)/∏(w − d)^m`, `deg P ≤ deg D`.
    pub fn sections(&self) -> Result<SectionSpace> {
        self.rational()?;
        SectionSpace::new(&self.line_divisor)
    }

    /// Basis (coefficient columns) of Γ(𝓛(−E)).
    pub fn section_space(&self, e: &Divisor) -> Result<CMatrix> {
        let space = self.sections()?;
        let basis = space.subspace(e);
        let expected = (degree(&self.line_divisor) - degree(e) + 1).max(0) as usize;
        if basis.ncols() != expected {
            return Err(Error::SpecialDivisor(format!(
                "Γ(𝓛(−E)) has dimension {}, expected {expected}",
                basis.ncols()
            )));
        }
        Ok(basis)
    }

    /// V = Γ(𝓛(−D_∞)) and V⊥ = Γ(𝓛(−ΣP)).
    pub fn adapted_spaces(&self) -> Result<(CMatrix, CMatrix)> {
        let v = self.section_space(&self.marked.d_inf)?;
        let mut p: Divisor = Vec::new();
        for x in &self.marked.p {
            add_point(&mut p, *x, 1);
        }
        let vp = self.section_space(&p)?;
        Ok((v, vp))
    }

    /// Witness `f` with divisor `D + ρ_*D − R`, scaled so `f(O_1) = form_scale`.
    pub fn witness(&self) -> Result<RationalFunction> {
        let curve = self.rational()?;
        let mut div: Divisor = Vec::new();
        for (x, m) in &self.line_divisor {
            add_point(&mut div, *x, *m);
            add_point(&mut div, curve.rho(x), *m);
        }
        for (x, m) in &self.marked.r {
            add_point(&mut div, *x, -*m);
        }
        let mut num = Poly::constant(ONE);
        let mut den = Poly::constant(ONE);
        for (x, m) in &div {
            if let Some(w) = x.x() {
                let f = Poly::from_roots(&vec![w; m.unsigned_abs() as usize]);
                if *m > 0 {
                    num = num.mul(&f);
                } else {
                    den = den.mul(&f);
                }
            }
        }
        let mut f = RationalFunction { num, den };
        let o1 = self.marked.o[0].x().ok_or_else(|| Error::Unsupported("O_1 at infinity".into()))?;
        let v = f.eval(o1);
        if !v.is_finite() || v.norm() < 1e-300 {
            return Err(Error::Reality(format!("witness vanishes or blows up at O_1 ({v})")));
        }
        f.num = f.num.scale(C64::new(self.form_scale, 0.0) / v);
        Ok(f)
    }

    pub fn hermitian_form(&self) -> Result<HermitianForm> {
        let space = self.sections()?;
        let f = self.witness()?;
        let dim = space.dim();
        let basis = CMatrix::identity(dim, dim);
        let gram = self.gram_in(&space, &f, &basis)?;
        if gram.clone().cholesky().is_none() {
            return Err(Error::Reality("Gram matrix of h is not positive definite".into()));
        }
        Ok(HermitianForm { gram, witness: f, space })
    }

    /// `G_ab = h(σ_a, σ_b) = Σ_j f(O_j) σ_a(O_j) conj(σ_b(O_j))` for coefficient
    /// columns, so `h(x, y) = y* Gᵀ x`.
    pub fn gram_in(&self, space: &SectionSpace, f: &RationalFunction, basis: &CMatrix) -> Result<CMatrix> {
        let ev = space.evaluation(&self.marked.o, basis)?;
        let mut gram = CMatrix::zeros(basis.ncols(), basis.ncols());
        for (j, o) in self.marked.o.iter().enumerate() {
            let fj = f.eval(o.x().unwrap_or(ZERO));
            for a in 0..basis.ncols() {
                for b in 0..basis.ncols() {
                    gram[(a, b)] += fj * ev[(j, a)] * ev[(j, b)].conj();
                }
            }
        }
        Ok(gram)
    }

    /// h-orthonormal basis of Γ(𝓛) adapted to V ⊕ V⊥ (grassmannian) or
    /// simply h-orthonormal (projective unitary).
    pub fn adapted_basis(&self) -> Result<CMatrix> {
        let form = self.hermitian_form()?;
        let raw = match self.target {
            Target::Grassmannian => {
                let (v, vp) = self.adapted_spaces()?;
                let mut cols: Vec<CVector> = v.column_iter().map(|c| c.into_owned()).collect();
                cols.extend(vp.column_iter().map(|c| c.into_owned()));
                CMatrix::from_columns(&cols)
            }
            Target::ProjectiveUnitary => CMatrix::identity(form.space.dim(), form.space.dim()),
        };
        let mut ortho = orthonormalize(&raw, &form.gram.transpose());
        for j in 0..ortho.ncols() {
            let col = ortho.column(j).into_owned();
            let (idx, _) = col.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.norm() > acc.1 + 1e-12 { (i, v.norm()) } else { acc });
            let phase = col[idx] / col[idx].norm();
            ortho.set_column(j, &(col / phase));
        }
        Ok(ortho)
    }

    /// h̃ from fiber identifications `t_j` at the `O_j`: the joint section σ
    /// satisfies `σ(O_j) = t_j c`, and `h̃(a, b) = Σ (a/σ)(O_j) conj((b/σ)(O_j))`.
    pub fn htilde_form(&self, fiber_ids: &[C64]) -> Result<CMatrix> {
        let space = self.sections()?;
        let dim = space.dim();
        let m = self.marked.o.len();
        if fiber_ids.len() != m {
            return Err(Error::Input(format!("{} fiber identifications for {m} points", fiber_ids.len())));
        }
        let ev = space.evaluation(&self.marked.o, &CMatrix::identity(dim, dim))?;
        let mut sys = CMatrix::zeros(m, dim + 1);
        for j in 0..m {
            for a in 0..dim {
                sys[(j, a)] = ev[(j, a)];
            }
            sys[(j, dim)] = -fiber_ids[j];
        }
        let ns = null_space(&sys, 1e-10);
        if ns.ncols() != 1 || ns[(dim, 0)].norm() < 1e-12 {
            return Err(Error::FiberIdentification(format!("joint section space has dimension {}", ns.ncols())));
        }
        let sigma = ns.column(0).rows(0, dim).into_owned();
        let sig_vals = space.evaluation(&self.marked.o, &CMatrix::from_columns(&[sigma]))?;
        let mut gram = CMatrix::zeros(dim, dim);
        for j in 0..m {
            let sv = sig_vals[(j, 0)];
            for a in 0..dim {
                for b in 0..dim {
                    gram[(a, b)] += (ev[(j, a)] / sv) * (ev[(j, b)] / sv).conj();
                }
            }
        }
        Ok(gram)
    }

    pub fn validate(&self, tol: &Tolerances) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let g = self.curve.genus();
        let n = self.n();
        let deg = degree(&self.line_divisor);
        rep.push(
            "divisor_degree",
            deg == (g + n) as i32,
            format!("deg D = {deg}, g + n = {}", g + n),
            if deg == (g + n) as i32 { vec![] } else { vec![format!("deg {deg}")] },
        );
        let mut wit = Vec::new();
        for (x, e) in self.marked.p.iter().zip(&self.marked.p_index) {
            let ok = match self.target {
                Target::Grassmannian => *e >= 2,
                Target::ProjectiveUnitary => *e == 1,
            };
            if !ok {
                wit.push(format!("{x} has ramification index {e}"));
            }
        }
        rep.push("ramification", wit.is_empty(), format!("indices {:?}", self.marked.p_index), wit);
        rep.flags.extend(self.flags.iter().cloned());

        let wit: Vec<String> = self
            .line_divisor
            .iter()
            .filter(|(x, _)| self.marked.o.iter().any(|o| o.close_to(x, 1e-9)))
            .map(|(x, _)| format!("divisor point {x} lies over λ = 1"))
            .collect();
        rep.push("divisor_avoids_o", wit.is_empty(), "D disjoint from the O_j", wit);

        match &self.curve {
            SpectralCurve::Rational(_) => self.validate_rational(&mut rep, tol),
            SpectralCurve::Hyperelliptic(_) => self.validate_hyperelliptic(&mut rep, tol),
        }
        rep
    }

    fn validate_rational(&self, rep: &mut ValidationReport, tol: &Tolerances) {
        let curve = self.curve.as_rational().expect("rational");
        match self.witness() {
            Ok(f) => {
                let mut wit = Vec::new();
                for k in 0..32 {
                    let c = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 32.0 + 0.013);
                    for (x, _) in curve.fiber(c) {
                        let v = f.eval(x.x().unwrap_or(ZERO));
                        if !(v.re > 0.0 && v.im.abs() <= 1e-8 * v.norm()) {
                            wit.push(format!("f({x}) = {v}"));
                        }
                    }
                }
                rep.push("reality", wit.is_empty(), "f positive over |λ| = 1", wit);
            }
            Err(e) => rep.push("reality", false, e.to_string(), vec![e.to_string()]),
        }
        match self.sections() {
            Ok(space) => {
                let dim = space.dim();
                rep.push(
                    "sections_dimension",
                    dim == self.n() + 1,
                    format!("dim Γ(𝓛) = {dim}"),
                    vec![],
                );
                match space.evaluation(&self.marked.o, &CMatrix::identity(dim, dim)) {
                    Ok(ev) => {
                        let r = rank(&ev, 1e-10);
                        let ok = r == dim && self.marked.o.len() == dim;
                        rep.push(
                            "no_section_vanishing_on_o",
                            ok,
                            format!("evaluation rank {r} of {dim}"),
                            if ok { vec![] } else { vec![format!("rank {r}")] },
                        );
                    }
                    Err(e) => rep.push("no_section_vanishing_on_o", false, e.to_string(), vec![]),
                }
            }
            Err(e) => rep.push("sections_dimension", false, e.to_string(), vec![]),
        }
        if self.target == Target::Grassmannian {
            match self.adapted_spaces() {
                Ok((v, vp)) => {
                    let mut ok = v.ncols() == self.k && vp.ncols() == self.n() + 1 - self.k;
                    let mut detail = format!("dim V = {}, dim V⊥ = {}", v.ncols(), vp.ncols());
                    if let (true, Ok(form)) = (ok, self.hermitian_form()) {
                        let mut worst = 0.0f64;
                        for a in 0..v.ncols() {
                            for b in 0..vp.ncols() {
                                let h = (v.column(a).transpose() * &form.gram * vp.column(b).map(|z| z.conj()))[(0, 0)];
                                worst = worst.max(h.norm());
                            }
                        }
                        ok &= worst <= tol.form.max(1e-10) * (1.0 + form.gram.norm());
                        detail.push_str(&format!(", h(V, V⊥) = {worst:e}"));
                    }
                    rep.push("adapted_spaces", ok, detail, vec![]);
                }
                Err(e) => rep.push("adapted_spaces", false, e.to_string(), vec![e.to_string()]),
            }
        }
    }

    fn validate_hyperelliptic(&self, rep: &mut ValidationReport, tol: &Tolerances) {
        // reality: D + ρD − R principal, and the witness takes equal values at
        // the O_j, i.e. the generalized Abel image lies in Λ′
        let curve = &self.curve;
        let h = curve.as_hyperelliptic().expect("hyperelliptic");
        let pairs: Vec<(CurvePoint, CurvePoint)> =
            self.marked.o.windows(2).map(|w| (self.marked.o[0], w[1])).collect();
        let result = (|| -> Result<f64> {
            let diffs = curve.differential_basis(&pairs)?;
            let pd = curve.period_lattice(&diffs, tol)?;
            let base = CurvePoint::at(h.branch_points()[0], 0);
            let mut total = CVector::zeros(pd.normalized.len());
            for (x, m) in &self.line_divisor {
                let a = curve.abel_map(&pd.normalized, &base, x)?;
                let b = curve.abel_map(&pd.normalized, &base, &curve.rho(x))?;
                total += (a + b) * C64::new(*m as f64, 0.0);
            }
            for (x, m) in &self.marked.r {
                total -= curve.abel_map(&pd.normalized, &base, x)? * C64::new(*m as f64, 0.0);
            }
            Ok(pd.lattice.distance(&total))
        })();
        match result {
            Ok(d) => rep.push(
                "reality",
                d <= 1e-6,
                format!("distance of 𝒜′(D + ρD − R) to Λ′: {d:e}"),
                if d <= 1e-6 { vec![] } else { vec![format!("{d:e}")] },
            ),
            Err(e) => rep.push("reality", false, e.to_string(), vec![e.to_string()]),
        }
    }
}

/// Quotient of two polynomials in `w`.
#[derive(Clone, Debug)]
pub struct RationalFunction {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFunction {
    pub fn eval(&self, w: C64) -> C64 {
        self.num.eval(w) / self.den.eval(w)
    }
}

/// Γ(O(D)) on the sphere: coefficient vectors `c` of `P(w) = Σ c_j w^j`
/// over the fixed denominator `∏_{d finite}(w − d)^{m_d}`.
#[derive(Clone, Debug)]
pub struct SectionSpace {
    pub denom: Poly,
    pub divisor: Divisor,
    dim: usize,
}

impl SectionSpace {
    pub fn new(d: &Divisor) -> Result<Self> {
        if d.iter().any(|(_, m)| *m < 0) {
            return Err(Error::Unsupported("line divisor must be effective".into()));
        }
        let mut denom = Poly::constant(ONE);
        for (x, m) in d {
            if let Some(w) = x.x() {
                denom = denom.mul(&Poly::from_roots(&vec![w; *m as usize]));
            }
        }
        Ok(SectionSpace { denom, divisor: d.clone(), dim: degree(d) as usize + 1 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn numerator(&self, coeffs: &[C64]) -> Poly {
        Poly::new(coeffs.to_vec())
    }

    /// Value of a section at `w` as a rational function.
    pub fn eval(&self, coeffs: &[C64], w: C64) -> C64 {
        self.numerator(coeffs).eval(w) / self.denom.eval(w)
    }

    /// Values at points, trivialized by the denominator (finite points only).
    pub fn evaluation(&self, pts: &[CurvePoint], basis: &CMatrix) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(pts.len(), basis.ncols());
        for (i, p) in pts.iter().enumerate() {
            let w = p.x().ok_or_else(|| Error::Unsupported("section value at w = ∞".into()))?;
            for j in 0..basis.ncols() {
                let c: Vec<C64> = basis.column(j).iter().copied().collect();
                let den = self.denom.eval(w);
                out[(i, j)] = if den.norm() > 1e-14 {
                    self.numerator(&c).eval(w) / den
                } else {
                    self.numerator(&c).eval(w)
                };
            }
        }
        Ok(out)
    }

    /// Basis of sections vanishing on `e` (orders counted on top of D).
    pub fn subspace(&self, e: &Divisor) -> CMatrix {
        let n = self.dim;
        let mut rows: Vec<Vec<C64>> = Vec::new();
        for (x, m) in e {
            match x.x() {
                Some(w) => {
                    // P^{(i)}(w) = 0 for i < m
                    for i in 0..(*m).max(0) as usize {
                        let mut row = vec![ZERO; n];
                        for (j, slot) in row.iter_mut().enumerate() {
                            if j >= i {
                                let mut fall = 1.0;
                                for t in 0..i {
                                    fall *= (j - t) as f64;
                                }
                                *slot = w.powu((j - i) as u32) * fall;
                            }
                        }
                        rows.push(row);
                    }
                }
                None => {
                    for i in 0..(*m).max(0) as usize {
                        if i < n {
                            let mut row = vec![ZERO; n];
                            row[n - 1 - i] = ONE;
                            rows.push(row);
                        }
                    }
                }
            }
        }
        if rows.is_empty() {
            return CMatrix::identity(n, n);
        }
        let m = CMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        let mut ns = null_space(&m, 1e-10);
        for j in 0..ns.ncols() {
            let col = ns.column(j).into_owned();
            let (idx, _) = col.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.norm() > acc.1 + 1e-12 { (i, v.norm()) } else { acc });
            let phase = col[idx] / col[idx].norm();
            ns.set_column(j, &(col / phase));
        }
        ns
    }
}

#[derive(Clone, Debug)]
pub struct HermitianForm {
    pub gram: CMatrix,
    pub witness: RationalFunction,
    pub space: SectionSpace,
}
