use std::sync::OnceLock;

use proptest::prelude::*;

use specmap::export::{fmt_f64, grid_csv, mesh_json, read_mesh_metadata, MeshMetadata};
use specmap::linalg::{c, C64, CMatrix, ONE};
use specmap::synth::{
    calibrate_theta, extended_frame, grassmannian_map, killing_fields, projection, pu_map, theta_map_spec, Domain, ExtendedFrame,
    ProjectionField,
};
use specmap::verify::conformality_function;
use specmap::{fixtures, Error, RunConfig, SpectralData, Tolerances};

fn data(name: &str) -> SpectralData {
    fixtures::by_name(name).unwrap().spectral_data().unwrap()
}

fn g0_frame() -> &'static (SpectralData, ExtendedFrame) {
    static F: OnceLock<(SpectralData, ExtendedFrame)> = OnceLock::new();
    F.get_or_init(|| {
        let d = data("g0");
        let f = extended_frame(&d).unwrap();
        (d, f)
    })
}

#[test]
fn frame_is_identity_at_origin() {
    for name in ["g0", "w3", "pu2"] {
        let f = extended_frame(&data(name)).unwrap();
        let z = vec![0.0; 2 * f.fields.len()];
        for l in [ONE, -ONE, C64::from_polar(1.0, 0.7)] {
            let e = f.eval(&z, l) - CMatrix::identity(f.dim, f.dim);
            assert!(e.norm() <= 1e-14, "{name}");
        }
    }
}

#[test]
fn fields_commute() {
    for name in ["g0", "w3", "pu2"] {
        let fields = killing_fields(&data(name)).unwrap();
        for a in &fields {
            for b in &fields {
                assert!(a.a.commutator(&b.a).max_abs() <= 1e-10, "{name}");
                assert!(a.a.commutator(&b.conj_a).max_abs() <= 1e-10, "{name}");
            }
        }
    }
}

#[test]
fn frame_is_unitary_on_circle() {
    let (_, f) = g0_frame();
    let ls: Vec<C64> = (0..8).map(|j| C64::from_polar(1.0, 0.8 * j as f64)).collect();
    let zs = vec![vec![0.3, -0.2], vec![1.5, 0.9]];
    assert!(f.unitarity_defect(&ls, &zs) <= 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projections_are_rank_k(x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let (d, f) = g0_frame();
        let v = f.eval(&[x, y], ONE).columns(0, d.k).into_owned();
        let p = projection(&v);
        prop_assert!((&p * &p - &p).norm() <= 1e-12);
        prop_assert!((p.adjoint() - &p).norm() <= 1e-12);
        prop_assert!((p.trace().re - d.k as f64).abs() <= 1e-12);
    }

    #[test]
    fn projection_ignores_frame_choice(re in prop::collection::vec(-1.0f64..1.0, 4), im in prop::collection::vec(-1.0f64..1.0, 4)) {
        let v = CMatrix::from_fn(3, 2, |i, j| c(re[i % 4] + j as f64, im[(i + j) % 4]));
        let g = CMatrix::from_fn(2, 2, |i, j| c(re[2 * i + j], im[2 * i + j])) + CMatrix::identity(2, 2) * c(3.0, 0.0);
        let p1 = projection(&v);
        let p2 = projection(&(&v * g));
        prop_assert!((p1 - p2).norm() <= 1e-10);
    }
}

#[test]
fn grassmannian_map_is_a_projection_field() {
    let (d, f) = g0_frame();
    let dom = Domain::new(-1.0, 1.0, -1.0, 1.0, 9, 9);
    let (map, pi) = grassmannian_map(f, d, &dom);
    assert_eq!(map.values.len(), 81);
    assert_eq!(map.values[0].shape(), (d.n() + 1, d.k));
    assert!(pi.projection_defect() <= 1e-12);
}

#[test]
fn pu_map_is_unitary_with_fixed_phase() {
    let d = data("pu2");
    let f = extended_frame(&d).unwrap();
    let map = pu_map(&f, &Domain::new(-0.5, 0.5, -0.5, 0.5, 5, 5));
    for m in &map.values {
        assert!((m.adjoint() * m - CMatrix::identity(m.nrows(), m.nrows())).norm() <= 1e-10);
        let first = m.iter().find(|z| z.norm() > 1e-8).unwrap();
        assert!(first.im.abs() <= 1e-12 && first.re > 0.0);
    }
}

#[test]
fn conformality_distinguishes_fixtures() {
    let dom = Domain::new(0.1, 0.3, 0.2, 0.4, 11, 11);
    let (d, f) = g0_frame();
    let rep = conformality_function(&grassmannian_map(f, d, &dom).1).unwrap();
    assert!(rep.non_conformal(1e-3), "g0 min |tr ∂Π∂Π| = {:e}", rep.min_abs);
    let w3 = data("w3");
    let f3 = extended_frame(&w3).unwrap();
    let rep = conformality_function(&grassmannian_map(&f3, &w3, &dom).1).unwrap();
    assert!(rep.max_abs <= 1e-6, "w3 max |tr ∂Π∂Π| = {:e}", rep.max_abs);
}

#[test]
fn impossible_calibration_threshold_is_reported() {
    let (spec, _) = theta_map_spec(&data("g0"), &Tolerances::default()).unwrap();
    let patch = Domain::centered(0.1, 0.2, 5e-3, 3);
    match calibrate_theta(&spec, &patch, 0.0) {
        Err(Error::Calibration { best, threshold, curve }) => {
            assert!(best > 0.0 && threshold == 0.0);
            assert!(!curve.is_empty());
        }
        other => panic!("expected calibration error, got {other:?}"),
    }
}

#[test]
fn domain_nodes() {
    let d = Domain::new(0.0, 1.0, -1.0, 1.0, 3, 5);
    assert_eq!(d.len(), 15);
    assert_eq!(d.node(0), (0.0, -1.0));
    assert_eq!(d.node(14), (1.0, 1.0));
    assert_eq!(d.hx(), 0.5);
    let p = Domain::centered(2.0, 3.0, 0.1, 2);
    assert_eq!(p.len(), 25);
    let (x, y) = p.node(12);
    assert!((x - 2.0).abs() < 1e-15 && (y - 3.0).abs() < 1e-15);
}

#[test]
fn float_format_is_stable() {
    assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
    assert_eq!(fmt_f64(-0.0), "0.0000000000000000e0");
    assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    assert_eq!(fmt_f64(-0.25), "-2.5000000000000000e-1");
    let x = 0.1 + 0.2;
    assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
}

#[test]
fn csv_and_mesh_layout() {
    let (d, f) = g0_frame();
    let dom = Domain::new(0.0, 1.0, 0.0, 1.0, 3, 2);
    let (map, _) = grassmannian_map(f, d, &dom);
    let csv = grid_csv(&map);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,y,re0,im0,re1,im1");
    assert_eq!(lines.len(), 7);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));
    let meta = MeshMetadata {
        config_hash: "abc".into(),
        engine: "exact".into(),
        target: "grassmannian".into(),
        tolerances: Tolerances::default(),
        domain: dom.clone(),
        extra: serde_json::json!({"k": 1}),
    };
    let text = mesh_json(&map, &meta);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["shape"], serde_json::json!([2, 1]));
    assert_eq!(v["values"].as_array().unwrap().len(), 6);
    let back = read_mesh_metadata(&text).unwrap();
    assert_eq!(back.config_hash, "abc");
    assert_eq!(back.extra["k"], 1);
}

#[test]
fn config_round_trip() {
    for name in fixtures::NAMES {
        let cfg = fixtures::by_name(name).unwrap();
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg, "{name}");
    }
    let mut v: serde_json::Value = serde_json::from_str(&fixtures::g0().to_json()).unwrap();
    v["colour"] = serde_json::json!("red");
    assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Input(_))));
}

#[test]
fn projection_field_from_fn() {
    let dom = Domain::new(0.0, 1.0, 0.0, 1.0, 4, 4);
    let pi = ProjectionField::from_fn(&dom, 1, |x, _| {
        let v = CMatrix::from_column_slice(2, 1, &[c(1.0, 0.0), c(x, 0.0)]);
        projection(&v)
    });
    assert!(pi.projection_defect() <= 1e-14);
}
