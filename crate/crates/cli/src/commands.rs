use serde_json::{json, Value};

use specmap::config::{Engine, RunConfig};
use specmap::curve::{CurvePoint, PeriodData, SpectralCurve};
use specmap::export::{grid_csv, mesh_json, read_mesh_metadata, MeshMetadata};
use specmap::linalg::{c, C64, CMatrix, ONE};
use specmap::synth::{
    calibrate_theta, extended_frame, grassmannian_map, killing_fields, projection, pu_map, theta_map, theta_map_spec, Calibration, Domain,
    ExtendedFrame, MapGrid, ProjectionField, ThetaMapSpec,
};
use specmap::theta::riemann_theta;
use specmap::verify::{
    classify_algebraic, conformality_function, equivariance_check, equivariance_directions, harmonicity_residual, harmonicity_residual_unitary,
    isometry_check, loop_structure_check, periodicity_search, Bounds, ResidualReport,
};
use specmap::{FlowSpec, GeneralizedLattice, SpectralData, Target};

use crate::{cjson, classify_error, config_hash, mjson, out_dir, vjson, write_file, CliError, Options, Outcome};

macro_rules! attempt {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return classify_error(err),
        }
    };
}

fn load(opts: &Options) -> Result<RunConfig, CliError> {
    crate::resolve(opts)
}

pub fn run_validate(opts: &Options) -> Result<Outcome, CliError> {
    let cfg = load(opts)?;
    let hash = config_hash(&cfg);
    let curve = attempt!(cfg.curve());
    let curve_rep = curve.validate_real_structure(&cfg.tolerances);
    let mut report = json!({ "config_hash": hash, "curve": curve_rep });
    let mut passed = curve_rep.passed();
    if passed {
        match cfg.spectral_data() {
            Ok(data) => {
                let rep = data.validate(&cfg.tolerances);
                passed &= rep.passed();
                report["spectral"] = serde_json::to_value(&rep).expect("report serializes");
                report["flags"] = json!(data.flags);
            }
            Err(e) => {
                passed = false;
                report["spectral"] = json!({ "error": e.to_string() });
            }
        }
    }
    report["passed"] = json!(passed);
    Ok(Outcome { passed, report })
}

fn period_data(curve: &SpectralCurve, cfg: &RunConfig) -> specmap::Result<PeriodData> {
    let o: Vec<CurvePoint> = curve.fiber(ONE).into_iter().map(|(p, _)| p).collect();
    let pairs: Vec<(CurvePoint, CurvePoint)> = o[1..].iter().map(|x| (o[0], *x)).collect();
    let diffs = curve.differential_basis(&pairs)?;
    curve.period_lattice(&diffs, &cfg.tolerances)
}

pub fn run_periods(opts: &Options) -> Result<Outcome, CliError> {
    let cfg = load(opts)?;
    let curve = attempt!(cfg.curve());
    let pd = attempt!(period_data(&curve, &cfg));
    let g = curve.genus();
    let im = pd.tau.map(|z| z.im);
    let posdef = g == 0 || im.clone().cholesky().is_some();
    let tol = cfg.tolerances.period;
    let passed = posdef && pd.symmetry_defect <= tol && pd.deformation_defect <= tol;
    let report = json!({
        "config_hash": config_hash(&cfg),
        "genus": g,
        "tau": mjson(&pd.tau),
        "a_periods": mjson(&pd.a_periods),
        "b_periods": mjson(&pd.b_periods),
        "augmented_rows": mjson(&pd.augmented_rows),
        "symmetry_defect": pd.symmetry_defect,
        "deformation_defect": pd.deformation_defect,
        "real_structure_residual": pd.real_structure_residual,
        "im_tau_positive_definite": posdef,
        "passed": passed,
    });
    Ok(Outcome { passed, report })
}

pub fn run_theta(opts: &Options) -> Result<Outcome, CliError> {
    let cfg = load(opts)?;
    let data = attempt!(cfg.spectral_data());
    let (spec, pd) = attempt!(theta_map_spec(&data, &cfg.tolerances));
    let mut report = json!({
        "config_hash": config_hash(&cfg),
        "genus": spec.genus(),
        "tau": mjson(&pd.tau),
        "kappa": vjson(&spec.kappa),
        "offsets": spec.offsets.iter().map(vjson).collect::<Vec<_>>(),
        "u": mjson(&spec.flow.u),
        "conj_u": mjson(&spec.flow.conj_u),
    });
    if let Some(params) = &spec.params {
        let t = attempt!(riemann_theta(&spec.kappa, params));
        report["theta_at_kappa"] = json!({ "value": cjson(t.value), "bound": t.bound, "terms": t.terms });
    }
    report["passed"] = json!(true);
    Ok(Outcome { passed: true, report })
}

/// Calibration sample: a 7×7 patch at the centre of the configured domain.
fn calibration_patch(d: &Domain) -> Domain {
    Domain::centered(0.5 * (d.x0 + d.x1), 0.5 * (d.y0 + d.y1), 5e-3, 3)
}

struct ThetaRun {
    spec: ThetaMapSpec,
    constants: Vec<C64>,
    calibration: Option<Calibration>,
}

fn theta_run(cfg: &RunConfig, data: &SpectralData) -> specmap::Result<ThetaRun> {
    let (spec, _) = theta_map_spec(data, &cfg.tolerances)?;
    match &cfg.constants {
        Some(c) => Ok(ThetaRun { spec, constants: c.clone(), calibration: None }),
        None => {
            let cal = calibrate_theta(&spec, &calibration_patch(&cfg.domain), 1e-4)?;
            Ok(ThetaRun { spec, constants: cal.c.clone(), calibration: Some(cal) })
        }
    }
}

fn metadata(cfg: &RunConfig, engine: &str, extra: Value) -> MeshMetadata {
    MeshMetadata {
        config_hash: config_hash(cfg),
        engine: engine.into(),
        target: match cfg.target {
            Target::Grassmannian => "grassmannian".into(),
            Target::ProjectiveUnitary => "projective_unitary".into(),
        },
        tolerances: cfg.tolerances,
        domain: cfg.domain.clone(),
        extra,
    }
}

fn periods_json(spec: &ThetaMapSpec) -> Value {
    let rep = periodicity_search(&spec.flow, &spec.lattice, &Bounds::default());
    json!({ "basis": rep.basis, "continuous": rep.continuous, "independent": rep.independent() })
}

pub fn run_synth(opts: &Options) -> Result<Outcome, CliError> {
    let cfg = load(opts)?;
    let curve = attempt!(cfg.curve());
    cfg.check_engine(&curve).map_err(|e| CliError::Config(e.to_string()))?;
    let data = attempt!(cfg.spectral_data());
    let dir = out_dir(&cfg);
    let both = cfg.engine == Engine::Both;
    let name = |stem: &str, engine: &str, ext: &str| if both { format!("{stem}_{engine}.{ext}") } else { format!("{stem}.{ext}") };
    let mut files = Vec::new();
    let mut report = json!({ "config_hash": config_hash(&cfg) });
    let mut exact_pi: Option<ProjectionField> = None;
    if matches!(cfg.engine, Engine::Exact | Engine::Both) {
        let frame = attempt!(extended_frame(&data));
        let (map, pi) = match cfg.target {
            Target::Grassmannian => {
                let (m, p) = grassmannian_map(&frame, &data, &cfg.domain);
                (m, Some(p))
            }
            Target::ProjectiveUnitary => (pu_map(&frame, &cfg.domain), None),
        };
        let mut extra = json!({});
        if data.n() == 1 && cfg.target == Target::Grassmannian {
            if let Ok((spec, _)) = theta_map_spec(&data, &cfg.tolerances) {
                extra["periods"] = periods_json(&spec);
            }
        }
        let meta = metadata(&cfg, "exact_exponential", extra);
        files.push(write_file(&dir, &name("map", "exact", "csv"), &grid_csv(&map))?);
        files.push(write_file(&dir, &name("mesh", "exact", "json"), &mesh_json(&map, &meta))?);
        exact_pi = pi;
    }
    if matches!(cfg.engine, Engine::Theta | Engine::Both) {
        let run = attempt!(theta_run(&cfg, &data));
        let (map, pi) = attempt!(theta_map(&run.spec, &run.constants, &cfg.domain));
        let mut extra = json!({
            "constants": run.constants.iter().map(|z| cjson(*z)).collect::<Vec<_>>(),
            "periods": periods_json(&run.spec),
            "degenerate_nodes": map.degenerate,
        });
        if let Some(cal) = &run.calibration {
            extra["calibration"] = json!({ "ratio": cal.ratio, "residual": cal.residual });
        }
        if let Some(epi) = &exact_pi {
            let iso = attempt!(isometry_check(epi, &pi));
            extra["alignment_residual"] = json!(iso.residual);
            report["alignment_residual"] = json!(iso.residual);
        }
        report["periods"] = extra["periods"].clone();
        let meta = metadata(&cfg, "theta", extra);
        files.push(write_file(&dir, &name("map", "theta", "csv"), &grid_csv(&map))?);
        files.push(write_file(&dir, &name("mesh", "theta", "json"), &mesh_json(&map, &meta))?);
    }
    report["files"] = json!(files.iter().map(|p| p.to_string_lossy().into_owned()).collect::<Vec<_>>());
    report["passed"] = json!(true);
    Ok(Outcome { passed: true, report })
}

const RESIDUAL_TOL: f64 = 1e-6;
const LEVELS: [f64; 3] = [4e-3, 2e-3, 1e-3];

fn check(name: &str, passed: bool, detail: Value) -> Value {
    json!({ "name": name, "passed": passed, "detail": detail })
}

fn patches(d: &Domain) -> Vec<Domain> {
    let (cx, cy) = (0.5 * (d.x0 + d.x1), 0.5 * (d.y0 + d.y1));
    LEVELS.iter().map(|h| Domain::centered(cx, cy, *h, 2)).collect()
}

fn samples(d: &Domain, dims: usize) -> Vec<Vec<f64>> {
    let (w, h) = (d.x1 - d.x0, d.y1 - d.y0);
    [(0.21, 0.37), (0.52, 0.64), (0.83, 0.15), (0.35, 0.91), (0.67, 0.48)]
        .iter()
        .map(|(a, b)| {
            let mut z = vec![0.0; dims];
            z[0] = d.x0 + a * w;
            if dims > 1 {
                z[1] = d.y0 + b * h;
            }
            z
        })
        .collect()
}

fn unit_directions(dims: usize) -> Vec<Vec<f64>> {
    (0..dims).map(|j| (0..dims).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report serializes")
}

/// Harmonic when every level already sits at roundoff below the tolerance,
/// or when the residual converges at second order (at least second order
/// for the unitary stencil).
fn harmonic_verdict(rep: &ResidualReport, exact_slope: bool) -> bool {
    if rep.roundoff_limited {
        return rep.sup <= rep.tol;
    }
    match rep.slope {
        Some(_) if exact_slope => rep.slope_ok(2.0, 0.2),
        Some(s) => s >= 1.8,
        None => false,
    }
}

fn verify_exact(cfg: &RunConfig, data: &SpectralData, fault: bool, checks: &mut Vec<Value>) -> specmap::Result<Option<ProjectionField>> {
    let mut fields = killing_fields(data)?;
    if fault {
        let dim = fields[0].a.dim();
        let mut e = CMatrix::zeros(dim, dim);
        e[(dim - 1, 0)] = c(1e-3, 0.0);
        fields[0].a.add_term(0, &e);
    }
    let st = loop_structure_check(&fields, data);
    checks.push(check("loop_structure", st.passed, to_value(&st)));
    let frame = match ExtendedFrame::new(fields, extended_frame(data)?.form) {
        Ok(f) => f,
        Err(e) => {
            checks.push(check("frame", false, json!({ "error": e.to_string() })));
            return Ok(None);
        }
    };
    let dims = 2 * frame.fields.len();
    let lambdas: Vec<C64> = (0..16).map(|j| C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / 16.0)).collect();
    let zs: Vec<Vec<f64>> = (0..100)
        .map(|i| {
            let t = i as f64;
            let mut z = vec![0.0; dims];
            for (m, v) in z.iter_mut().enumerate() {
                *v = (0.7 * t + 1.3 * m as f64).sin() * 1.5;
            }
            z
        })
        .collect();
    let defect = frame.unitarity_defect(&lambdas, &zs);
    checks.push(check("unitarity", defect <= cfg.tolerances.frame, json!({ "defect": defect })));
    let levels = patches(&cfg.domain);
    match cfg.target {
        Target::Grassmannian => {
            let fields: Vec<ProjectionField> = levels.iter().map(|d| grassmannian_map(&frame, data, d).1).collect();
            let rep = harmonicity_residual(&fields, RESIDUAL_TOL)?;
            checks.push(check("harmonicity", harmonic_verdict(&rep, true), to_value(&rep)));
            let conf_dom = Domain::centered(levels[0].x0 + 2.0 * levels[0].hx(), levels[0].y0 + 2.0 * levels[0].hy(), 1e-3, 4);
            let conf = conformality_function(&grassmannian_map(&frame, data, &conf_dom).1)?;
            checks.push(check(
                "conformality",
                true,
                json!({ "min_abs": conf.min_abs, "max_abs": conf.max_abs, "non_conformal": conf.non_conformal(1e-6) }),
            ));
            let k = data.k;
            let eval = |z: &[f64]| projection(&frame.eval(z, ONE).columns(0, k).into_owned());
            let eq = equivariance_check(eval, &unit_directions(dims), &samples(&cfg.domain, dims), &[0.3, 1.1], true);
            checks.push(check("equivariance", eq.worst() <= 1e-8, json!({ "worst": eq.worst(), "total": true })));
            Ok(Some(ProjectionField::from_map(&grassmannian_map(&frame, data, &cfg.domain).0)))
        }
        Target::ProjectiveUnitary => {
            let maps: Vec<MapGrid> = levels.iter().map(|d| pu_map(&frame, d)).collect();
            let rep = harmonicity_residual_unitary(&maps, RESIDUAL_TOL)?;
            checks.push(check("harmonicity", harmonic_verdict(&rep, false), to_value(&rep)));
            Ok(None)
        }
    }
}

fn verify_theta(cfg: &RunConfig, data: &SpectralData, checks: &mut Vec<Value>) -> specmap::Result<ProjectionField> {
    let run = theta_run(cfg, data)?;
    let levels: Vec<ProjectionField> =
        patches(&cfg.domain).iter().map(|d| theta_map(&run.spec, &run.constants, d).map(|r| r.1)).collect::<specmap::Result<_>>()?;
    let rep = harmonicity_residual(&levels, RESIDUAL_TOL)?;
    checks.push(check("theta_harmonicity", harmonic_verdict(&rep, true), to_value(&rep)));
    let dirs = equivariance_directions(&run.spec.flow, &run.spec.lattice);
    let dims = 2 * run.spec.flow.k();
    let total = dirs.len() == dims;
    let spec = &run.spec;
    let consts = &run.constants;
    let eval = |z: &[f64]| spec.vector(z, consts).map(|v| projection(&CMatrix::from_column_slice(v.len(), 1, v.as_slice()))).unwrap_or_else(|_| CMatrix::zeros(1, 1));
    let eq = equivariance_check(eval, &dirs, &samples(&cfg.domain, dims), &[0.3, 1.1], total);
    checks.push(check(
        "theta_equivariance",
        eq.worst() <= 1e-6,
        json!({ "directions": eq.directions, "worst": eq.worst(), "total": total }),
    ));
    Ok(theta_map(&run.spec, &run.constants, &cfg.domain)?.1)
}

pub fn run_verify(opts: &Options) -> Result<Outcome, CliError> {
    let cfg = load(opts)?;
    let hash = config_hash(&cfg);
    if let Some(mesh) = &opts.mesh {
        let text = std::fs::read_to_string(mesh)?;
        let meta = read_mesh_metadata(&text).map_err(|e| CliError::Config(e.to_string()))?;
        if meta.config_hash != hash {
            return Err(CliError::Config(format!("mesh was produced from a different config ({} != {hash})", meta.config_hash)));
        }
    }
    let curve = attempt!(cfg.curve());
    cfg.check_engine(&curve).map_err(|e| CliError::Config(e.to_string()))?;
    let data = attempt!(cfg.spectral_data());
    let mut checks = Vec::new();
    let spectral = data.validate(&cfg.tolerances);
    checks.push(check("spectral_data", spectral.passed(), to_value(&spectral)));
    let mut exact_pi = None;
    if matches!(cfg.engine, Engine::Exact | Engine::Both) {
        exact_pi = attempt!(verify_exact(&cfg, &data, opts.inject_fault, &mut checks));
    }
    if matches!(cfg.engine, Engine::Theta | Engine::Both) {
        let pi = attempt!(verify_theta(&cfg, &data, &mut checks));
        if let Some(epi) = &exact_pi {
            let iso = attempt!(isometry_check(epi, &pi));
            checks.push(check("engine_alignment", iso.residual <= 1e-6, json!({ "residual": iso.residual })));
        }
    }
    let passed = checks.iter().all(|c| c["passed"] == json!(true));
    Ok(Outcome { passed, report: json!({ "config_hash": hash, "checks": checks, "passed": passed }) })
}

pub fn run_classify(opts: &Options) -> Result<Outcome, CliError> {
    let cfg = load(opts)?;
    let data = attempt!(cfg.spectral_data());
    let bounds = Bounds::default();
    let mut report = json!({ "config_hash": config_hash(&cfg), "bounds": to_value(&bounds) });
    let ty = if data.curve.genus() == 0 {
        let lattice = GeneralizedLattice::new(CMatrix::zeros(0, 0), 0, 0);
        let flow = FlowSpec { u: CMatrix::zeros(0, 1), conj_u: CMatrix::zeros(0, 1) };
        classify_algebraic(&data, &lattice, &flow, &bounds)
    } else {
        let (spec, _) = attempt!(theta_map_spec(&data, &cfg.tolerances));
        report["periods"] = periods_json(&spec);
        classify_algebraic(&data, &spec.lattice, &spec.flow, &bounds)
    };
    if data.curve.genus() == 0 && data.n() == 1 {
        if let Ok((spec, _)) = theta_map_spec(&data, &cfg.tolerances) {
            report["periods"] = periods_json(&spec);
        }
    }
    report["tag"] = json!(ty.tag.to_string());
    report["evidence"] = json!(ty.evidence);
    report["passed"] = json!(true);
    Ok(Outcome { passed: true, report })
}
