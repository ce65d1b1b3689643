//! Named run configurations used by tests, benches and the CLI.

use crate::config::{DivisorEntry, Engine, PointSpec, RunConfig};
use crate::curve::{BranchSpec, CurveSpec};
use crate::linalg::C64;
use crate::spectral::Target;
use crate::synth::Domain;
use crate::tol::Tolerances;

fn re(v: &[f64]) -> Vec<C64> {
    v.iter().map(|x| C64::new(*x, 0.0)).collect()
}

fn at(x: f64, mult: i32) -> DivisorEntry {
    DivisorEntry { point: PointSpec::real(x), mult }
}

fn branches(v: &[f64], infinity: bool) -> CurveSpec {
    let mut b: Vec<BranchSpec> = v.iter().map(|x| BranchSpec::Point(C64::new(*x, 0.0))).collect();
    if infinity {
        b.push(BranchSpec::Named("inf".into()));
    }
    CurveSpec::Hyperelliptic { branch_points: b }
}

fn base(name: &str, curve: CurveSpec, line_divisor: Vec<DivisorEntry>, target: Target, engine: Engine) -> RunConfig {
    RunConfig {
        name: name.into(),
        curve,
        line_divisor,
        target,
        k: 1,
        designated: None,
        form_scale: 1.0,
        domain: Domain::new(-1.0, 1.0, -1.0, 1.0, 64, 64),
        tolerances: Tolerances::default(),
        engine,
        constants: None,
        output: None,
    }
}

/// λ = w², 𝓛 = O((0)), k = 1: the great-circle vacuum.
pub fn g0() -> RunConfig {
    let curve = CurveSpec::Rational { numerator: re(&[0.0, 0.0, 1.0]), denominator: re(&[1.0]) };
    base("g0", curve, vec![at(0.0, 1)], Target::Grassmannian, Engine::Exact)
}

/// λ = w³ with 𝓛 = O(2·(0)): the designated zero has index 3.
pub fn w3() -> RunConfig {
    let curve = CurveSpec::Rational { numerator: re(&[0.0, 0.0, 0.0, 1.0]), denominator: re(&[1.0]) };
    base("w3", curve, vec![at(0.0, 2)], Target::Grassmannian, Engine::Exact)
}

/// λ = (w² − a²)/(1 − a²w²), a = 0.6, projective unitary target.
pub fn pu2() -> RunConfig {
    let a2 = 0.36;
    let curve = CurveSpec::Rational { numerator: re(&[-a2, 0.0, 1.0]), denominator: re(&[1.0, 0.0, -a2]) };
    base("pu2", curve, vec![at(0.0, 1)], Target::ProjectiveUnitary, Engine::Exact)
}

/// Genus 1, four real branch points (two reciprocal pairs).
pub fn g1_real() -> CurveSpec {
    branches(&[0.5, 2.0, -0.4, -2.5], false)
}

/// Genus 2, six real branch points in reciprocal pairs.
pub fn g2() -> CurveSpec {
    branches(&[-3.0, -1.0 / 3.0, 0.2, 5.0, 0.4, 2.5], false)
}

/// Genus 1 with branch points {0, 1/2, 2, ∞}; D = (0) + (1/2) so that
/// D + ρD is the ramification divisor and the form is positive.
pub fn delaunay() -> RunConfig {
    let mut c = base("delaunay", branches(&[0.0, 0.5, 2.0], true), vec![at(0.0, 1), at(0.5, 1)], Target::Grassmannian, Engine::Theta);
    c.domain = Domain::new(0.0, 4.5, 0.0, 1.6, 64, 64);
    c
}

/// Genus 2 with branch points {0, ∞, 0.3, 1/0.3, −0.7, −1/0.7}.
pub fn g2_flow() -> RunConfig {
    let curve = branches(&[0.0, 0.3, 1.0 / 0.3, -0.7, -1.0 / 0.7], true);
    base("g2_flow", curve, vec![at(0.0, 1), at(0.3, 1), at(-0.7, 1)], Target::Grassmannian, Engine::Theta)
}

pub fn by_name(name: &str) -> Option<RunConfig> {
    match name {
        "g0" => Some(g0()),
        "w3" => Some(w3()),
        "pu2" => Some(pu2()),
        "delaunay" => Some(delaunay()),
        "g2_flow" => Some(g2_flow()),
        _ => None,
    }
}

pub const NAMES: [&str; 5] = ["g0", "w3", "pu2", "delaunay", "g2_flow"];
