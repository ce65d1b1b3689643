//! Riemann theta function with a guaranteed truncation bound, theta
//! translates, generalized sections on `J′` and divisor translates κ.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curve::{CurvePoint, Differential, PeriodData, SpectralCurve};
use crate::error::{Error, Result};
use crate::linalg::{gauss_legendre, C64, CMatrix, CVector, RMatrix, ONE, ZERO};

/// θ(z|τ) = Σ exp(πi mᵀτm + 2πi mᵀz).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaParams {
    pub tau: CMatrix,
    pub eps: f64,
    #[serde(skip)]
    cache: Option<Cache>,
}

#[derive(Clone, Debug)]
struct Cache {
    y: RMatrix,
    y_inv: RMatrix,
    upper: RMatrix,
    mu: f64,
}

/// A theta value with the truncation bound that was honoured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaValue {
    pub value: C64,
    pub bound: f64,
    pub terms: usize,
}

impl ThetaParams {
    pub fn new(tau: CMatrix, eps: f64) -> Result<Self> {
        let g = tau.nrows();
        if tau.ncols() != g {
            return Err(Error::Parameter("τ must be square".into()));
        }
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::Parameter("eps must be positive".into()));
        }
        let asym = (&tau - tau.transpose()).norm();
        if asym > 1e-6 * (1.0 + tau.norm()) {
            return Err(Error::Parameter(format!("τ not symmetric (defect {asym:e})")));
        }
        let y = RMatrix::from_fn(g, g, |i, j| 0.5 * (tau[(i, j)].im + tau[(j, i)].im));
        let mu = if g == 0 { 1.0 } else { y.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min) };
        if mu <= 0.0 {
            return Err(Error::Parameter("Im τ is not positive definite".into()));
        }
        let chol = y.clone().cholesky().ok_or_else(|| Error::Parameter("Im τ is not positive definite".into()))?;
        let upper = chol.l().transpose();
        let y_inv = chol.inverse();
        Ok(ThetaParams { tau, eps, cache: Some(Cache { y, y_inv, upper, mu }) })
    }

    pub fn genus(&self) -> usize {
        self.tau.nrows()
    }

    fn cache(&self) -> Cache {
        match &self.cache {
            Some(c) => c.clone(),
            None => ThetaParams::new(self.tau.clone(), self.eps).expect("validated τ").cache.unwrap(),
        }
    }
}

/// Upper bound for `Σ_{‖m+c‖_Y > r} exp(−π‖m+c‖²_Y)` when `Y ≥ μ I`, scaled by
/// `weight(s)` in the summand (`s^p` for derivatives).
fn tail_bound(g: usize, mu: f64, r: f64, power: i32) -> f64 {
    // counting bound N(s) ≤ (2s/√μ + 1)^g, then integrate by parts
    let (x, w) = gauss_legendre(40);
    let span = 12.0;
    let mut acc = 0.0;
    let panels = 8;
    for p in 0..panels {
        let a = r + span * p as f64 / panels as f64;
        let b = r + span * (p + 1) as f64 / panels as f64;
        for k in 0..x.len() {
            let s = 0.5 * (a + b) + 0.5 * (b - a) * x[k];
            let count = (2.0 * s / mu.sqrt() + 1.0).powi(g as i32);
            let dens = (2.0 * PI * s + power as f64 / s.max(1e-12)) * s.powi(power) * (-PI * s * s).exp();
            acc += 0.5 * (b - a) * w[k] * count * dens;
        }
    }
    acc
}

fn radius_for(g: usize, mu: f64, target: f64, power: i32) -> f64 {
    let mut r = 1.0;
    while tail_bound(g, mu, r, power) > target && r < 60.0 {
        r += 0.25;
    }
    r
}

struct Enumerated {
    sum: C64,
    grad: Vec<C64>,
    terms: usize,
}

/// Sum over `‖m + c‖_Y ≤ r`, deterministic lexicographic order.
fn ellipsoid_sum(params: &ThetaParams, cache: &Cache, z: &CVector, c: &[f64], r: f64, want_grad: bool) -> Enumerated {
    let g = params.genus();
    let u = &cache.upper;
    let mut out = Enumerated { sum: ZERO, grad: vec![ZERO; g], terms: 0 };
    let mut m = vec![0i64; g];
    fn rec(
        i: usize,
        partial: f64,
        m: &mut Vec<i64>,
        u: &RMatrix,
        c: &[f64],
        r2: f64,
        f: &mut dyn FnMut(&[i64]),
    ) {
        let g = m.len();
        let mut shift = 0.0;
        for j in i + 1..g {
            shift += u[(i, j)] * (m[j] as f64 + c[j]);
        }
        let uii = u[(i, i)];
        let room = r2 - partial;
        if room < 0.0 {
            return;
        }
        let half = room.sqrt() / uii;
        let center = -shift / uii - c[i];
        let lo = (center - half).ceil() as i64;
        let hi = (center + half).floor() as i64;
        for mi in lo..=hi {
            m[i] = mi;
            let t = uii * (mi as f64 + c[i]) + shift;
            let np = partial + t * t;
            if i == 0 {
                f(m);
            } else {
                rec(i - 1, np, m, u, c, r2, f);
            }
        }
    }
    let tau = &params.tau;
    let mut visit = |m: &[i64]| {
        let mut e = ZERO;
        for a in 0..g {
            let ma = m[a] as f64;
            if ma == 0.0 {
                continue;
            }
            e += 2.0 * ma * z[a];
            for b in 0..g {
                e += tau[(a, b)] * (ma * m[b] as f64);
            }
        }
        let term = (C64::new(0.0, PI) * e).exp();
        out.sum += term;
        if want_grad {
            for a in 0..g {
                out.grad[a] += term * C64::new(0.0, 2.0 * PI * m[a] as f64);
            }
        }
        out.terms += 1;
    };
    if g == 0 {
        visit(&[]);
    } else {
        rec(g - 1, 0.0, &mut m, u, c, r * r, &mut visit);
    }
    out
}

/// Splits `z = z′ + τn` with `n` integral and `Y⁻¹ Im z′` in `[−½, ½]^g`.
fn reduce_argument(params: &ThetaParams, cache: &Cache, z: &CVector) -> (CVector, Vec<f64>) {
    let g = params.genus();
    let im = nalgebra::DVector::from_fn(g, |i, _| z[i].im);
    let b = &cache.y_inv * im;
    let n: Vec<f64> = b.iter().map(|v| v.round()).collect();
    let mut zr = z.clone();
    for a in 0..g {
        for k in 0..g {
            zr[a] -= params.tau[(a, k)] * n[k];
        }
    }
    (zr, n)
}

fn theta_impl(z: &CVector, params: &ThetaParams, want_grad: bool) -> Result<(ThetaValue, Vec<C64>)> {
    let g = params.genus();
    if z.len() != g {
        return Err(Error::Parameter(format!("argument has length {} for genus {g}", z.len())));
    }
    let cache = params.cache();
    let (zr, n) = reduce_argument(params, &cache, z);
    let im = nalgebra::DVector::from_fn(g, |i, _| zr[i].im);
    let c = &cache.y_inv * &im;
    let cs: Vec<f64> = c.iter().copied().collect();
    let growth = (PI * (c.transpose() * &cache.y * &c)[(0, 0)]).exp();
    // θ(z) = factor · θ(z′) with factor = exp(−πi nᵀτn − 2πi nᵀz′)
    let nv = CVector::from_fn(g, |i, _| C64::new(n[i], 0.0));
    let mut e = ZERO;
    for a in 0..g {
        e += 2.0 * nv[a] * zr[a];
        for b in 0..g {
            e += params.tau[(a, b)] * nv[a] * nv[b];
        }
    }
    let factor = (C64::new(0.0, -PI) * e).exp();
    let scale = factor.norm() * growth;
    let target = params.eps / scale.max(1e-300);
    let r = radius_for(g, cache.mu, target, if want_grad { 1 } else { 0 }).max(1.0);
    let bound = tail_bound(g, cache.mu, r, 0) * scale;
    let s = ellipsoid_sum(params, &cache, &zr, &cs, r, want_grad);
    let value = s.sum * factor;
    let grad: Vec<C64> = if want_grad {
        // d/dz of factor·θ(z′) with z′ = z − τn: factor' = −2πi n·factor
        (0..g).map(|a| (s.grad[a] - C64::new(0.0, 2.0 * PI * n[a]) * s.sum) * factor).collect()
    } else {
        Vec::new()
    };
    Ok((ThetaValue { value, bound, terms: s.terms }, grad))
}

pub fn riemann_theta(z: &CVector, params: &ThetaParams) -> Result<ThetaValue> {
    Ok(theta_impl(z, params, false)?.0)
}

/// θ and its gradient.
pub fn riemann_theta_grad(z: &CVector, params: &ThetaParams) -> Result<(C64, Vec<C64>)> {
    let (v, g) = theta_impl(z, params, true)?;
    Ok((v.value, g))
}

/// `e(m, m′, z) = exp(−πi mᵀτm − 2πi mᵀz)` so that `θ(z + τm + m′) = e·θ(z)`.
pub fn quasi_period_factor(z: &CVector, m: &[i64], _m_prime: &[i64], params: &ThetaParams) -> C64 {
    let g = params.genus();
    let mut e = ZERO;
    for a in 0..g {
        let ma = m[a] as f64;
        e += 2.0 * ma * z[a];
        for b in 0..g {
            e += params.tau[(a, b)] * (ma * m[b] as f64);
        }
    }
    (C64::new(0.0, -PI) * e).exp()
}

/// Offsets `Δ_l ∈ C^g` entering the generalized sections, from the
/// b-periods of the normalized third-kind differentials.
pub fn section_offsets(periods: &PeriodData) -> Vec<CVector> {
    let g = periods.tau.nrows();
    (0..periods.augmented_rows.nrows())
        .map(|l| CVector::from_fn(g, |j, _| periods.augmented_rows[(l, j)] / C64::new(0.0, 2.0 * PI)))
        .collect()
}

/// `θ_k(p) = exp(Σ k_l p_{g+l}) · θ(Z + Σ k_l Δ_l)`. Fiber coordinates have
/// period `2πi`, so `exp(p_{g+l})` is the normalized fiber exponential.
pub fn generalized_theta_section(k: &[i64], p: &CVector, params: &ThetaParams, offsets: &[CVector]) -> Result<C64> {
    let g = params.genus();
    let mut arg = CVector::from_fn(g, |i, _| p[i]);
    let mut fiber = ZERO;
    for (l, kl) in k.iter().enumerate() {
        if *kl == 0 {
            continue;
        }
        arg += &offsets[l] * C64::new(*kl as f64, 0.0);
        fiber += p[g + l] * (*kl as f64);
    }
    Ok(fiber.exp() * riemann_theta(&arg, params)?.value)
}

/// κ with `θ(𝒜_B(P) + κ)` vanishing exactly on the positive divisor `D`
/// (degree g), where `B` is a branch point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: CVector,
    pub half_period: (Vec<u8>, Vec<u8>),
    pub residual: f64,
    pub off_divisor_min: f64,
}

pub fn kappa_for_divisor(
    curve: &SpectralCurve,
    hol: &[Differential],
    divisor: &[CurvePoint],
    params: &ThetaParams,
    base: &CurvePoint,
    tol_zero: f64,
) -> Result<KappaResult> {
    let g = params.genus();
    if divisor.len() != g || hol.len() != g {
        return Err(Error::Parameter(format!("divisor of degree {} for genus {g}", divisor.len())));
    }
    if !curve.is_branch_point(base) {
        return Err(Error::Parameter("κ requires a branch-point base".into()));
    }
    let images: Vec<CVector> = divisor.iter().map(|p| curve.abel_map(hol, base, p)).collect::<Result<_>>()?;
    let mut sum = CVector::zeros(g);
    for v in &images {
        sum += v;
    }
    let probes: Vec<CVector> = curve
        .sample_points(g + 3)
        .into_iter()
        .filter(|q| divisor.iter().all(|d| !d.close_to(q, 1e-3)))
        .take(g + 1)
        .map(|q| curve.abel_map(hol, base, &q))
        .collect::<Result<_>>()?;
    let eval = |kappa: &CVector, pts: &[CVector]| -> Result<Vec<C64>> {
        pts.iter().map(|v| Ok(riemann_theta(&(v + kappa), params)?.value)).collect()
    };
    let mut best: Option<(f64, f64, CVector, (Vec<u8>, Vec<u8>))> = None;
    for mask in 0..(1u32 << (2 * g)) {
        let a: Vec<u8> = (0..g).map(|i| (mask >> i & 1) as u8).collect();
        let b: Vec<u8> = (0..g).map(|i| (mask >> (g + i) & 1) as u8).collect();
        let mut k = -sum.clone();
        for i in 0..g {
            k[i] += C64::new(0.5 * a[i] as f64, 0.0);
            for j in 0..g {
                k[i] += params.tau[(i, j)] * (0.5 * b[j] as f64);
            }
        }
        let off: f64 = eval(&k, &probes)?.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        let on: f64 = eval(&k, &images)?.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let scale = eval(&k, &probes)?.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        let score = on / scale;
        if off / scale < 1e-6 {
            continue;
        }
        if best.as_ref().is_none_or(|(s, _, _, _)| score < *s) {
            best = Some((score, off / scale, k, (a, b)));
        }
    }
    let Some((mut score, off, mut kappa, hp)) = best else {
        return Err(Error::DegenerateDivisor("θ vanishes identically on the curve for every half-period".into()));
    };
    // damped Newton on θ(𝒜(D_i) + κ) = 0
    for _ in 0..20 {
        if score <= 1e-13 {
            break;
        }
        let mut jac = CMatrix::zeros(g, g);
        let mut f = CVector::zeros(g);
        for (i, v) in images.iter().enumerate() {
            let (val, grad) = riemann_theta_grad(&(v + &kappa), params)?;
            f[i] = val;
            for j in 0..g {
                jac[(i, j)] = grad[j];
            }
        }
        let Some(step) = jac.lu().solve(&f) else { break };
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-4 {
            let trial = &kappa - &step * C64::new(t, 0.0);
            let on: f64 = eval(&trial, &images)?.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let scale = eval(&trial, &probes)?.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
            if on / scale < score {
                kappa = trial;
                score = on / scale;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if score > tol_zero {
        return Err(Error::DegenerateDivisor(format!("best half-period leaves residual {score:e}")));
    }
    let _ = ONE;
    Ok(KappaResult { kappa, half_period: hp, residual: score, off_divisor_min: off })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn theta_at_i_is_gamma_value() {
        let p = ThetaParams::new(CMatrix::from_element(1, 1, c(0.0, 1.0)), 1e-15).unwrap();
        let v = riemann_theta(&CVector::from_element(1, ZERO), &p).unwrap();
        assert!((v.value.re - 1.086_434_811_213_308).abs() < 1e-12);
    }
}
