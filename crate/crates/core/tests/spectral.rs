use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specmap::config::{DivisorEntry, PointSpec};
use specmap::linalg::{c, C64, CMatrix};
use specmap::{fixtures, Error, Tolerances};

#[test]
fn fixtures_validate() {
    for name in fixtures::NAMES {
        let data = fixtures::by_name(name).unwrap().spectral_data().unwrap();
        let rep = data.validate(&Tolerances::default());
        assert!(rep.passed(), "{name}: {:?}", rep.failures().map(|c| &c.name).collect::<Vec<_>>());
    }
}

#[test]
fn wrong_divisor_degree_fails_validation() {
    let mut cfg = fixtures::g0();
    cfg.line_divisor.push(DivisorEntry { point: PointSpec::real(0.5), mult: 1 });
    match cfg.spectral_data() {
        Ok(data) => assert!(!data.validate(&Tolerances::default()).get("divisor_degree").unwrap().passed),
        Err(e) => assert!(!matches!(e, Error::Input(_)), "{e}"),
    }
}

#[test]
fn gram_is_positive_definite_on_genus_zero() {
    for name in ["g0", "w3", "pu2"] {
        let data = fixtures::by_name(name).unwrap().spectral_data().unwrap();
        let form = data.hermitian_form().unwrap();
        assert!((&form.gram - form.gram.adjoint()).norm() <= 1e-12, "{name}");
        assert!(form.gram.clone().cholesky().is_some(), "{name}");
    }
}

#[test]
fn witness_is_positive_on_unit_circle() {
    for name in ["g0", "w3", "pu2"] {
        let f = fixtures::by_name(name).unwrap().spectral_data().unwrap().witness().unwrap();
        for j in 0..32 {
            let v = f.eval(C64::from_polar(1.0, PI / 16.0 * j as f64 + 0.01));
            assert!(v.re > 0.0 && v.im.abs() <= 1e-10 * v.re, "{name}: f = {v}");
        }
    }
}

#[test]
fn adapted_spaces_have_expected_dimensions_and_are_orthogonal() {
    for name in ["g0", "w3"] {
        let data = fixtures::by_name(name).unwrap().spectral_data().unwrap();
        let (v, vp) = data.adapted_spaces().unwrap();
        assert_eq!(v.ncols(), data.k);
        assert_eq!(vp.ncols(), data.n() + 1 - data.k);
        let m = data.hermitian_form().unwrap().gram.transpose();
        let cross = vp.adjoint() * &m * &v;
        let scale = (v.norm() * vp.norm() * m.norm()).max(1.0);
        assert!(cross.norm() <= 1e-10 * scale, "{name}: {:e}", cross.norm());
    }
}

/// h̃ built from fiber identifications |t_j|² f(O_j) = 1 (arbitrary phases)
/// is a positive multiple of h.
#[test]
fn htilde_is_proportional_to_h() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in ["g0", "pu2"] {
        let data = fixtures::by_name(name).unwrap().spectral_data().unwrap();
        let form = data.hermitian_form().unwrap();
        let fo: Vec<f64> = data.marked.o.iter().map(|o| form.witness.eval(o.x().unwrap()).re).collect();
        for _ in 0..50 {
            let ids: Vec<C64> = fo.iter().map(|f| C64::from_polar(1.0 / f.sqrt(), rng.random_range(0.0..TAU))).collect();
            let ht = data.htilde_form(&ids).unwrap();
            let h: &CMatrix = &form.gram;
            let scale = (ht.dot(h) / h.dot(h)).re;
            assert!(scale > 0.0);
            assert!((&ht - h * c(scale, 0.0)).norm() <= 1e-9 * ht.norm(), "{name}");
        }
    }
}

#[test]
fn hermitian_form_needs_genus_zero() {
    let data = fixtures::delaunay().spectral_data().unwrap();
    assert!(matches!(data.hermitian_form(), Err(Error::Unsupported(_))));
}

#[test]
fn higher_index_zero_is_flagged() {
    let w3 = fixtures::w3().spectral_data().unwrap();
    assert_eq!(w3.marked.p_index, vec![3]);
    assert!(!w3.flags.is_empty());
    let g0 = fixtures::g0().spectral_data().unwrap();
    assert_eq!(g0.marked.p_index, vec![2]);
}
