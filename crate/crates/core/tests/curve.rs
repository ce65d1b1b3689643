use specmap::curve::{BranchSpec, CurvePoint, Differential, PeriodData};
use specmap::linalg::{c, C64, ONE};
use specmap::{fixtures, CurveSpec, GeneralizedLattice, SpectralCurve, Tolerances};

fn hyper(points: &[C64]) -> CurveSpec {
    CurveSpec::Hyperelliptic { branch_points: points.iter().map(|z| BranchSpec::Point(*z)).collect() }
}

fn unit_pairs(curve: &SpectralCurve) -> Vec<(CurvePoint, CurvePoint)> {
    let o: Vec<CurvePoint> = curve.fiber(ONE).into_iter().map(|(p, _)| p).collect();
    o[1..].iter().map(|x| (o[0], *x)).collect()
}

fn periods(curve: &SpectralCurve) -> (Vec<Differential>, PeriodData) {
    let diffs = curve.differential_basis(&unit_pairs(curve)).unwrap();
    let pd = curve.period_lattice(&diffs, &Tolerances::default()).unwrap();
    (diffs, pd)
}

#[test]
fn real_structure_validation() {
    let tol = Tolerances::default();
    let ok = SpectralCurve::from_spec(&fixtures::g1_real()).unwrap();
    assert!(ok.validate_real_structure(&tol).passed());

    let bad = SpectralCurve::from_spec(&hyper(&[c(0.5, 0.0), c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)])).unwrap();
    let rep = bad.validate_real_structure(&tol);
    let check = rep.get("unit_circle_unbranched").unwrap();
    assert!(!check.passed);
    assert!(!check.witnesses.is_empty());

    let unpaired = SpectralCurve::from_spec(&hyper(&[c(0.5, 0.0), c(3.0, 0.0), c(-0.4, 0.0), c(-2.5, 0.0)])).unwrap();
    assert!(!unpaired.validate_real_structure(&tol).get("reciprocal_conjugate").unwrap().passed);

    let pu = fixtures::pu2().curve().unwrap();
    assert!(pu.validate_real_structure(&tol).passed());
}

#[test]
fn malformed_curves_are_structural_errors() {
    assert!(SpectralCurve::from_spec(&hyper(&[c(0.5, 0.0), c(2.0, 0.0), c(-0.4, 0.0)])).is_err());
    let degenerate = CurveSpec::Rational { numerator: vec![c(1.0, 0.0)], denominator: vec![c(1.0, 0.0)] };
    assert!(SpectralCurve::from_spec(&degenerate).is_err());
}

#[test]
fn rational_lambda_commutes_with_rho() {
    let curve = fixtures::pu2().curve().unwrap();
    for p in curve.sample_points(12) {
        let l = curve.lambda(&p).unwrap();
        let lr = curve.lambda(&curve.rho(&p)).unwrap();
        assert!((lr * l.conj() - ONE).norm() <= 1e-12);
    }
    let fiber: Vec<C64> = curve.fiber(ONE).into_iter().map(|(p, _)| p.x().unwrap()).collect();
    assert_eq!(fiber.len(), 2);
    for w in fiber {
        assert!((w.norm() - 1.0).abs() <= 1e-12);
        assert!(curve.rho(&CurvePoint::w(w)).close_to(&CurvePoint::w(w), 1e-12));
    }
}

#[test]
fn third_kind_residues_are_unit() {
    for spec in [fixtures::g1_real(), fixtures::g2()] {
        let curve = SpectralCurve::from_spec(&spec).unwrap();
        let diffs = curve.differential_basis(&unit_pairs(&curve)).unwrap();
        let g = curve.genus();
        assert_eq!(diffs.len(), g + 1);
        let (p, q) = diffs[g].poles.unwrap();
        let rp = curve.numeric_residue(&diffs[g], &p).unwrap();
        let rq = curve.numeric_residue(&diffs[g], &q).unwrap();
        assert!((rp - ONE).norm() <= 1e-9, "{rp}");
        assert!((rq + ONE).norm() <= 1e-9, "{rq}");
        for d in &diffs[..g] {
            assert!(curve.numeric_residue(d, &p).unwrap().norm() <= 1e-9);
        }
    }
}

#[test]
fn period_invariants() {
    for spec in [fixtures::g1_real(), fixtures::g2()] {
        let curve = SpectralCurve::from_spec(&spec).unwrap();
        let g = curve.genus();
        let (_, pd) = periods(&curve);
        assert_eq!(pd.lattice.rank(), 2 * g + 1);
        assert!(pd.symmetry_defect <= 1e-8);
        assert!(pd.tau.map(|z| z.im).cholesky().is_some());
        assert!(pd.real_structure_residual <= 1e-8, "{:e}", pd.real_structure_residual);
        assert!(pd.lattice.involution_defect() <= 1e-8);
    }
}

#[test]
fn abel_map_is_additive_modulo_periods() {
    let curve = SpectralCurve::from_spec(&fixtures::g2()).unwrap();
    let (diffs, pd) = periods(&curve);
    let hol = &pd.normalized[..2];
    let base = CurvePoint::at(c(0.2, 0.0), 0);
    let base_lattice = GeneralizedLattice::new(pd.lattice.generators.view((0, 0), (2, 4)).into_owned(), 2, 0);
    let pts = curve.sample_points(6);
    for w in pts.windows(2) {
        let direct = curve.abel_map(hol, &base, &w[1]).unwrap();
        let split = curve.abel_map(hol, &base, &w[0]).unwrap() + curve.abel_map(hol, &w[0], &w[1]).unwrap();
        assert!(base_lattice.contains(&(direct - split), 1e-8));
    }
    assert_eq!(diffs.len(), 3);
}

/// τ depends on the branch set, not on the order it was given in.
#[test]
fn periods_do_not_depend_on_input_order() {
    let pts = [c(-3.0, 0.0), c(-1.0 / 3.0, 0.0), c(0.2, 0.0), c(5.0, 0.0), c(0.4, 0.0), c(2.5, 0.0)];
    let mut rev = pts;
    rev.reverse();
    let a = periods(&SpectralCurve::from_spec(&hyper(&pts)).unwrap()).1;
    let b = periods(&SpectralCurve::from_spec(&hyper(&rev)).unwrap()).1;
    assert!((a.tau - b.tau).norm() <= 1e-12);
}

#[test]
fn direction_vectors_have_full_rank() {
    for cfg in [fixtures::delaunay(), fixtures::g2_flow()] {
        let data = cfg.spectral_data().unwrap();
        let curve = &data.curve;
        let (_, pd) = periods(curve);
        let u = curve.direction_vector(&pd.normalized, &data.marked.p[0], data.marked.p_index[0]).unwrap();
        assert!(u.norm() > 1e-10);
        assert!(curve.direction_vector(&pd.normalized, &data.marked.p[0], 1).is_err());
    }
}
