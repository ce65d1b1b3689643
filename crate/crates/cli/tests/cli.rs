use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn specmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specmap")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const UNIT_CIRCLE: &str = r#"{
  "curve": {"kind": "hyperelliptic", "branch_points": [[1.0, 0.0], [-1.0, 0.0], [0.5, 0.0], [2.0, 0.0]]},
  "line_divisor": [{"point": {"x": [0.5, 0.0]}}],
  "target": "grassmannian",
  "k": 1,
  "domain": {"x0": -1, "x1": 1, "y0": -1, "y1": 1, "nx": 8, "ny": 8}
}"#;

#[test]
fn validate_g0_config_file_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "g0.json", &specmap::fixtures::g0().to_json());
    let out = specmap(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(&out)["passed"], Value::Bool(true));
}

#[test]
fn branch_point_on_unit_circle_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "uc.json", UNIT_CIRCLE);
    let out = specmap(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let checks = report(&out)["curve"]["checks"].as_array().unwrap().clone();
    let uc = checks.iter().find(|c| c["name"] == "unit_circle_unbranched").unwrap();
    assert_eq!(uc["passed"], Value::Bool(false));
    assert!(!uc["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"curve": {"kind": "hyperelliptic"}, "k": 1"#);
    assert_eq!(specmap(&["validate", "--config", &cfg]).status.code(), Some(2));
    let unknown = write(dir.path(), "unknown.json", &specmap::fixtures::g0().to_json().replacen('{', "{\"colour\": 3,", 1));
    assert_eq!(specmap(&["validate", "--config", &unknown]).status.code(), Some(2));
    assert_eq!(specmap(&["validate", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    assert_eq!(specmap(&["validate", "--fixture", "g0", "--tol.nonsense", "1e-3"]).status.code(), Some(2));
    assert_eq!(specmap(&["validate", "--fixture", "g0", "--grid", "3"]).status.code(), Some(2));
    assert_eq!(specmap(&["synth"]).status.code(), Some(2));
}

#[test]
fn exact_engine_rejects_positive_genus() {
    let dir = tempfile::tempdir().unwrap();
    let out = specmap(&["synth", "--fixture", "delaunay", "--engine", "exact", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_g0_writes_grid_csv_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = specmap(&["synth", "--fixture", "g0", "--grid", "64,64", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("map.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 64 * 64 + 1);
    assert_eq!(lines[0], "x,y,re0,im0,re1,im1");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));
    let mesh: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("mesh.json")).unwrap()).unwrap();
    assert_eq!(mesh["metadata"]["engine"], "exact_exponential");
    assert_eq!(mesh["metadata"]["config_hash"], report(&out)["config_hash"]);
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = specmap(&["synth", "--fixture", "g0", "--grid", "32,24", "--out", d.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["map.csv", "mesh.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn projective_unitary_target_writes_matrix_entries() {
    let dir = tempfile::tempdir().unwrap();
    let out = specmap(&["synth", "--fixture", "pu2", "--grid", "8,8", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("map.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x,y,re0,im0,re1,im1,re2,im2,re3,im3");
    assert_eq!(csv.lines().count(), 65);
}

#[test]
fn both_engines_align_on_g0() {
    let dir = tempfile::tempdir().unwrap();
    let out = specmap(&["synth", "--fixture", "g0", "--engine", "both", "--grid", "16,16", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["alignment_residual"].as_f64().unwrap() < 1e-6);
    for f in ["map_exact.csv", "map_theta.csv", "mesh_exact.json", "mesh_theta.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn verify_g0_passes_and_checks_mesh_hash() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(specmap(&["synth", "--fixture", "g0", "--grid", "8,8", "--out", d]).status.code(), Some(0));
    let mesh = dir.path().join("mesh.json");
    let mesh = mesh.to_str().unwrap();
    let out = specmap(&["verify", "--fixture", "g0", "--grid", "8,8", "--mesh", mesh]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(specmap(&["verify", "--fixture", "g0", "--grid", "9,8", "--mesh", mesh]).status.code(), Some(2));
}

#[test]
fn injected_fault_fails_structure_check() {
    let out = specmap(&["verify", "--fixture", "g0", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let checks = r["checks"].as_array().unwrap();
    let st = checks.iter().find(|c| c["name"] == "loop_structure").unwrap();
    assert_eq!(st["passed"], Value::Bool(false));
}

#[test]
fn classify_g0_is_type_a() {
    let out = specmap(&["classify", "--fixture", "g0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["tag"], "A");
}

#[test]
fn periods_and_theta_report_delaunay_data() {
    let out = specmap(&["periods", "--fixture", "delaunay"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["genus"], 1);
    assert!(r["tau"][0][0][1].as_f64().unwrap() > 0.0);
    let out = specmap(&["theta", "--fixture", "delaunay", "--tol.period=1e-8"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["offsets"].as_array().unwrap().len(), 1);
}
