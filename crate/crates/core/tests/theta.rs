use std::f64::consts::PI;

use proptest::prelude::*;

use specmap::curve::CurvePoint;
use specmap::linalg::{c, C64, CMatrix, CVector, ZERO};
use specmap::synth::theta_map_spec;
use specmap::theta::{kappa_for_divisor, riemann_theta, ThetaParams};
use specmap::{fixtures, Tolerances};

fn tau2() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.2, 1.1), c(-0.3, 0.4), c(-0.3, 0.4), c(0.1, 0.9)])
}

fn brute(z: &[C64], tau: &CMatrix, r: i64) -> C64 {
    let mut acc = ZERO;
    for a in -r..=r {
        for b in -r..=r {
            let m = [a as f64, b as f64];
            let mut e = ZERO;
            for i in 0..2 {
                e += 2.0 * m[i] * z[i];
                for j in 0..2 {
                    e += tau[(i, j)] * (m[i] * m[j]);
                }
            }
            acc += (c(0.0, PI) * e).exp();
        }
    }
    acc
}

#[test]
fn rejects_invalid_parameters() {
    assert!(ThetaParams::new(CMatrix::from_element(1, 1, c(0.0, -1.0)), 1e-12).is_err());
    assert!(ThetaParams::new(CMatrix::from_element(1, 1, c(0.0, 1.0)), 0.0).is_err());
    assert!(ThetaParams::new(CMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.5, 0.0), c(0.0, 0.0), c(0.0, 1.0)]), 1e-12).is_err());
}

#[test]
fn reports_honoured_bound() {
    let p = ThetaParams::new(tau2(), 1e-13).unwrap();
    let z = CVector::from_vec(vec![c(0.3, 0.2), c(-0.1, 0.4)]);
    let v = riemann_theta(&z, &p).unwrap();
    assert!(v.bound <= 1e-13);
    assert!(v.terms > 1);
    let exact = brute(z.as_slice(), &tau2(), 20);
    assert!((v.value - exact).norm() <= 1e-13, "{:e}", (v.value - exact).norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_box_sum(re in prop::array::uniform2(-1.0f64..1.0), im in prop::array::uniform2(-0.6f64..0.6)) {
        let p = ThetaParams::new(tau2(), 1e-14).unwrap();
        let z = [c(re[0], im[0]), c(re[1], im[1])];
        let v = riemann_theta(&CVector::from_column_slice(&z), &p).unwrap().value;
        let b = brute(&z, &tau2(), 20);
        prop_assert!((v - b).norm() <= 1e-12 * b.norm().max(1.0));
    }

    #[test]
    fn even_function(re in prop::array::uniform2(-2.0f64..2.0), im in prop::array::uniform2(-1.0f64..1.0)) {
        let p = ThetaParams::new(tau2(), 1e-15).unwrap();
        let z = CVector::from_vec(vec![c(re[0], im[0]), c(re[1], im[1])]);
        let a = riemann_theta(&z, &p).unwrap().value;
        let b = riemann_theta(&(-&z), &p).unwrap().value;
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(b.norm()));
    }

    #[test]
    fn integer_periodic(re in -2.0f64..2.0, im in -1.0f64..1.0, m in -3i64..=3) {
        let p = ThetaParams::new(CMatrix::from_element(1, 1, c(0.3, 0.8)), 1e-15).unwrap();
        let z = CVector::from_element(1, c(re, im));
        let a = riemann_theta(&z, &p).unwrap().value;
        let b = riemann_theta(&CVector::from_element(1, c(re + m as f64, im)), &p).unwrap().value;
        prop_assert!((a - b).norm() <= 1e-12 * a.norm());
    }
}

/// θ_1/θ_0 is unchanged by every generator of Λ′ (section property).
#[test]
fn section_ratio_is_lattice_invariant() {
    let tol = Tolerances::default();
    for cfg in [fixtures::delaunay(), fixtures::g2_flow()] {
        let (spec, _) = theta_map_spec(&cfg.spectral_data().unwrap(), &tol).unwrap();
        let l = &spec.lattice;
        let consts = [c(1.0, 0.0), c(0.7, 0.2)];
        for seed in 0..4 {
            let s = seed as f64;
            let p = CVector::from_fn(l.dim(), |i, _| c(0.11 + 0.07 * (i as f64 + s), -0.2 + 0.13 * s - 0.05 * i as f64));
            let v = spec.vector_at(&p, &consts).unwrap();
            let r0 = v[1] / v[0];
            for j in 0..l.rank() {
                let w = spec.vector_at(&(&p + l.generators.column(j)), &consts).unwrap();
                let r = w[1] / w[0];
                assert!((r - r0).norm() <= 1e-9 * r0.norm(), "{} generator {j}", cfg.name);
            }
        }
    }
}

/// κ puts the zeros of θ(𝒜(P) + κ) on a prescribed degree-g divisor.
#[test]
fn kappa_reproduces_divisor_at_genus_two() {
    let data = fixtures::g2_flow().spectral_data().unwrap();
    let curve = &data.curve;
    let (spec, pd) = theta_map_spec(&data, &Tolerances::default()).unwrap();
    let params = spec.params.unwrap();
    let hol = &pd.normalized[..2];
    let base = curve.ramification_divisor().into_iter().map(|(x, _)| x).find(|x| x.x().is_some()).unwrap();
    let d = [CurvePoint::at(c(0.6, 0.35), 1), CurvePoint::at(c(-0.45, -0.8), -1)];
    let k = kappa_for_divisor(curve, hol, &d, &params, &base, 1e-7).unwrap();
    let probe = riemann_theta(&(curve.abel_map(hol, &base, &CurvePoint::at(c(1.3, 0.4), 1)).unwrap() + &k.kappa), &params).unwrap().value;
    for p in &d {
        let v = riemann_theta(&(curve.abel_map(hol, &base, p).unwrap() + &k.kappa), &params).unwrap().value;
        assert!(v.norm() <= 1e-7 * probe.norm().max(1.0), "θ at divisor point {:e}", v.norm());
    }
    assert!(probe.norm() > 1e-4);
}
