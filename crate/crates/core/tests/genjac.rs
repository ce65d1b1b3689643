use std::sync::OnceLock;

use proptest::prelude::*;

use specmap::linalg::{c, CVector};
use specmap::synth::{theta_map_spec, ThetaMapSpec};
use specmap::{fixtures, FlowSpec, GeneralizedLattice, Tolerances};

fn spec(name: &str) -> ThetaMapSpec {
    theta_map_spec(&fixtures::by_name(name).unwrap().spectral_data().unwrap(), &Tolerances::default()).unwrap().0
}

fn g2() -> &'static ThetaMapSpec {
    static S: OnceLock<ThetaMapSpec> = OnceLock::new();
    S.get_or_init(|| spec("g2_flow"))
}

fn vector(l: &GeneralizedLattice, parts: &[f64]) -> CVector {
    CVector::from_fn(l.dim(), |i, _| c(parts[2 * i], parts[2 * i + 1]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn reduce_is_idempotent_and_periodic(
        parts in prop::collection::vec(-4.0f64..4.0, 6),
        m in prop::collection::vec(-3i32..=3, 5),
    ) {
        let l = &g2().lattice;
        let v = vector(l, &parts);
        let r = l.reduce(&v);
        prop_assert!((l.reduce(&r) - &r).norm() <= 1e-9);
        let shifted = &v + l.combination(&m.iter().map(|x| *x as f64).collect::<Vec<_>>());
        prop_assert!(l.contains(&(l.reduce(&shifted) - &r), 1e-8));
        prop_assert!(l.contains(&(&v - &r), 1e-8));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn flow_is_a_homomorphism(a in prop::array::uniform2(-3.0f64..3.0), b in prop::array::uniform2(-3.0f64..3.0)) {
        let s = g2();
        let (l, f) = (&s.lattice, &s.flow);
        let sum = [a[0] + b[0], a[1] + b[1]];
        let d = f.gamma(&sum, l) - f.gamma(&a, l) - f.gamma(&b, l);
        prop_assert!(l.contains(&d, 1e-8));
    }

    #[test]
    fn reality_is_constant_along_the_flow(z in prop::array::uniform2(-3.0f64..3.0)) {
        let s = g2();
        let p = s.flow.gamma(&z, &s.lattice);
        prop_assert!(s.lattice.is_real_point(&p, 1e-8) == s.lattice.is_real_point(&CVector::zeros(3), 1e-8));
    }

    #[test]
    fn fiber_translate_keeps_base(parts in prop::collection::vec(-2.0f64..2.0, 6), t in -7.0f64..7.0) {
        let l = &g2().lattice;
        let p = vector(l, &parts);
        let q = l.fiber_translate(&p, &[t]);
        prop_assert!(q[0] == p[0] && q[1] == p[1]);
        prop_assert!((q[2] - p[2] - c(0.0, t)).norm() <= 1e-15);
    }
}

#[test]
fn real_involution_preserves_lattice() {
    for name in ["delaunay", "g2_flow", "g0"] {
        let l = spec(name).lattice;
        assert!(l.involution_defect() <= 1e-8, "{name}");
        let c2 = &l.real_involution * l.real_involution.map(|z| z.conj());
        assert!((c2 - specmap::CMatrix::identity(l.dim(), l.dim())).norm() <= 1e-8, "{name}: R is not an involution");
    }
}

/// Rank of the real tangents {U, Ū} and of the base-kernel (directions of
/// forced equivariance): genus 1 leaves one direction, genus 2 none.
#[test]
fn immersion_and_kernel_dimension() {
    for (name, kernel) in [("delaunay", 1usize), ("g2_flow", 0)] {
        let s = spec(name);
        let t = s.flow.real_tangents();
        let sv = t.clone().svd(false, false).singular_values;
        assert!(sv.iter().all(|x| *x > 1e-10), "{name}: tangents degenerate");
        assert_eq!(specmap::verify::equivariance_directions(&s.flow, &s.lattice).len(), kernel, "{name}");
    }
}

#[test]
fn flow_conjugate_is_minus_real_image() {
    let s = spec("delaunay");
    let f = FlowSpec::new(s.flow.u.clone(), &s.lattice);
    let r = s.lattice.apply_real(&s.flow.u.column(0).into_owned());
    assert!((f.conj_u.column(0) + r).norm() <= 1e-15);
}
