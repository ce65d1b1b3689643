use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specmap::laurent::LaurentMatrix;
use specmap::linalg::{c, CMatrix};
use specmap::synth::{extended_frame, grassmannian_map, killing_fields, projection, theta_map_spec, Domain, ProjectionField};
use specmap::verify::{
    classify_algebraic, equivariance_check, harmonicity_residual, isometry_check, loop_structure_check, one_minus_inverse_quotient,
    periodicity_search, rational_approx, AlgebraicTag, Bounds,
};
use specmap::{fixtures, FlowSpec, SpectralData, Tolerances};

fn data(name: &str) -> SpectralData {
    fixtures::by_name(name).unwrap().spectral_data().unwrap()
}

fn line(a: f64, b: f64) -> impl Fn(f64, f64) -> CMatrix + Sync {
    move |x, y| projection(&CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(a * x, b * y)]))
}

#[test]
fn isometry_rejects_unrelated_maps() {
    let dom = Domain::new(0.0, 1.0, 0.0, 1.0, 6, 6);
    let p1 = ProjectionField::from_fn(&dom, 1, line(1.0, 1.0));
    let p2 = ProjectionField::from_fn(&dom, 1, line(2.0, -0.3));
    assert!(isometry_check(&p1, &p2).unwrap().residual > 1e-2);
    let u = CMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    let p3 = ProjectionField::from_fn(&dom, 1, |x, y| &u * line(1.0, 1.0)(x, y) * u.adjoint());
    assert!(isometry_check(&p1, &p3).unwrap().residual <= 1e-10);
}

#[test]
fn random_flow_has_no_periods() {
    let (spec, _) = theta_map_spec(&data("g2_flow"), &Tolerances::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let u = CMatrix::from_fn(spec.flow.u.nrows(), spec.flow.u.ncols(), |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let flow = FlowSpec::new(u, &spec.lattice);
    let rep = periodicity_search(&flow, &spec.lattice, &Bounds::default());
    assert_eq!(rep.independent(), 0, "{:?}", rep.basis);
}

#[test]
fn g0_periods() {
    let (spec, _) = theta_map_spec(&data("g0"), &Tolerances::default()).unwrap();
    let rep = periodicity_search(&spec.flow, &spec.lattice, &Bounds::default());
    assert!(rep.contains(&[0.0, PI], 1e-6));
    assert!(!rep.contains(&[0.0, 1.0], 1e-6));
}

proptest! {
    #[test]
    fn rational_approx_recovers_small_fractions(p in -200i64..200, q in 1i64..40) {
        let (a, b) = rational_approx(p as f64 / q as f64, 50).unwrap();
        prop_assert_eq!(a * q, p * b);
        prop_assert!(b <= q);
    }
}

#[test]
fn rational_approx_rejects_irrationals() {
    assert_eq!(rational_approx(2f64.sqrt(), 50), None);
    assert_eq!(rational_approx(PI, 50), None);
    assert_eq!(rational_approx(0.0, 50), Some((0, 1)));
}

#[test]
fn classification() {
    let bounds = Bounds::default();
    for (name, want) in [("delaunay", AlgebraicTag::B), ("g2_flow", AlgebraicTag::None)] {
        let d = data(name);
        let (spec, _) = theta_map_spec(&d, &Tolerances::default()).unwrap();
        assert_eq!(classify_algebraic(&d, &spec.lattice, &spec.flow, &bounds).tag, want, "{name}");
    }
}

#[test]
fn classification_is_monotone_in_denominator_bound() {
    let d = data("g2_flow");
    let (spec, _) = theta_map_spec(&d, &Tolerances::default()).unwrap();
    let small = classify_algebraic(&d, &spec.lattice, &spec.flow, &Bounds { q_max: 10, ..Bounds::default() });
    let large = classify_algebraic(&d, &spec.lattice, &spec.flow, &Bounds { q_max: 50, ..Bounds::default() });
    if small.tag == AlgebraicTag::C {
        assert_eq!(large.tag, AlgebraicTag::C);
    }
}

#[test]
fn equivariance_negative_control() {
    // a rotation in z_x is a symmetry up to conjugation, a translation is not
    let rot = |z: &[f64]| projection(&CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(z[0].cos(), z[0].sin())]));
    let trans = |z: &[f64]| projection(&CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(z[0], 0.0)]));
    let samples = vec![vec![0.1, 0.0], vec![0.7, 0.3], vec![-0.4, 0.2]];
    assert!(equivariance_check(rot, &[vec![1.0, 0.0]], &samples, &[1.0], true).worst() <= 1e-10);
    assert!(equivariance_check(trans, &[vec![1.0, 0.0]], &samples, &[1.0], true).worst() > 1e-3);
}

#[test]
fn loop_structure_detects_perturbation() {
    let d = data("g0");
    let mut fields = killing_fields(&d).unwrap();
    assert!(loop_structure_check(&fields, &d).passed);
    let dim = fields[0].a.dim();
    let mut bump = CMatrix::zeros(dim, dim);
    bump[(dim - 1, 0)] = c(1e-3, 0.0);
    fields[0].a.add_term(0, &bump);
    let rep = loop_structure_check(&fields, &d);
    assert!(!rep.passed && !rep.violations.is_empty());
}

#[test]
fn pu_fields_are_divisible() {
    let d = data("pu2");
    let fields = killing_fields(&d).unwrap();
    assert!(loop_structure_check(&fields, &d).passed);
    for f in &fields {
        let q = one_minus_inverse_quotient(&f.a).unwrap();
        assert!(q.support(1e-10).iter().all(|d| *d == 0));
    }
    let m = CMatrix::identity(2, 2);
    let bad = LaurentMatrix::from_terms(2, vec![(-1, m.clone()), (1, m * c(2.0, 0.0))]);
    let q = one_minus_inverse_quotient(&bad).unwrap();
    assert!(q.support(1e-10).iter().any(|d| *d != 0));
}

#[test]
fn harmonicity_slope_needs_three_levels() {
    let d = data("g0");
    let f = extended_frame(&d).unwrap();
    let level = |h: f64| grassmannian_map(&f, &d, &Domain::centered(0.3, 0.2, h, 2)).1;
    let two = harmonicity_residual(&[level(4e-2), level(2e-2)], 1e-6).unwrap();
    assert!(two.slope.is_none());
    let three = harmonicity_residual(&[level(4e-2), level(2e-2), level(1e-2)], 1e-6).unwrap();
    assert!(three.slope.is_some());
    assert_eq!(three.levels.len(), 3);
}

#[test]
fn non_harmonic_field_fails() {
    let level = |h: f64| ProjectionField::from_fn(&Domain::centered(0.3, 0.2, h, 2), 1, line(1.0, 3.0));
    let rep = harmonicity_residual(&[level(4e-2), level(2e-2), level(1e-2)], 1e-6).unwrap();
    assert!(!rep.passed && rep.sup > 1e-3);
}
