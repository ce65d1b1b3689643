//! Pipeline orchestration behind the `specmap` binary.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use specmap::config::{parse_target, Engine, RunConfig};
use specmap::linalg::{C64, CMatrix, CVector};
use specmap::{fixtures, Error, Target};

mod commands;

pub use commands::{run_classify, run_periods, run_synth, run_theta, run_validate, run_verify};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// Result of a subcommand: pass/fail plus a JSON report.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub report: Value,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed { 0 } else { 1 }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub fixture: Option<String>,
    pub grid: Option<(usize, usize)>,
    pub domain: Option<[f64; 4]>,
    pub engine: Option<Engine>,
    pub target: Option<Target>,
    pub out: Option<PathBuf>,
    pub tol: Vec<(String, f64)>,
    pub mesh: Option<PathBuf>,
    /// Test hook: perturbs a Killing-field coefficient before verification.
    pub inject_fault: bool,
}

pub fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("--grid expects NX,NY, got {s:?}")));
    }
    let p = |t: &str| t.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("bad grid size {t:?}")));
    Ok((p(parts[0])?, p(parts[1])?))
}

pub fn parse_domain(s: &str) -> Result<[f64; 4], CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad domain value {t:?}"))))
        .collect::<Result<_, _>>()?;
    if v.len() != 4 {
        return Err(CliError::Usage(format!("--domain expects x0,x1,y0,y1, got {s:?}")));
    }
    Ok([v[0], v[1], v[2], v[3]])
}

pub fn parse_engine(s: &str) -> Result<Engine, CliError> {
    s.parse().map_err(|e: Error| CliError::Usage(e.to_string()))
}

pub fn parse_target_arg(s: &str) -> Result<Target, CliError> {
    parse_target(s).map_err(|e| CliError::Usage(e.to_string()))
}

/// Pulls `--tol.<name> <value>` / `--tol.<name>=<value>` out of argv.
pub fn split_tol_args(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, f64)>), CliError> {
    let mut rest = Vec::new();
    let mut tol = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(spec) = a.strip_prefix("--tol.") else {
            rest.push(a);
            continue;
        };
        let (name, value) = match spec.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| CliError::Usage(format!("--tol.{spec} needs a value")))?;
                (spec.to_string(), v)
            }
        };
        let v: f64 = value.parse().map_err(|_| CliError::Usage(format!("bad tolerance {value:?}")))?;
        tol.push((name, v));
    }
    Ok((rest, tol))
}

/// Loads the config (file or named fixture) and applies overrides.
pub fn resolve(opts: &Options) -> Result<RunConfig, CliError> {
    let mut cfg = match (&opts.config, &opts.fixture) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            RunConfig::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        (None, Some(name)) => fixtures::by_name(name).ok_or_else(|| CliError::Usage(format!("unknown fixture {name:?}")))?,
        (None, None) => return Err(CliError::Usage("one of --config or --fixture is required".into())),
    };
    if let Some((nx, ny)) = opts.grid {
        cfg.domain.nx = nx;
        cfg.domain.ny = ny;
    }
    if let Some([x0, x1, y0, y1]) = opts.domain {
        cfg.domain.x0 = x0;
        cfg.domain.x1 = x1;
        cfg.domain.y0 = y0;
        cfg.domain.y1 = y1;
    }
    if let Some(e) = opts.engine {
        cfg.engine = e;
    }
    if let Some(t) = opts.target {
        cfg.target = t;
    }
    for (name, v) in &opts.tol {
        if !cfg.tolerances.set(name, *v) {
            return Err(CliError::Usage(format!("unknown tolerance {name:?}")));
        }
    }
    if let Some(out) = &opts.out {
        cfg.output = Some(out.to_string_lossy().into_owned());
    }
    Ok(cfg)
}

/// SHA-256 of the canonical config JSON (output path excluded).
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.output = None;
    let text = serde_json::to_string(&c).expect("config serializes");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn out_dir(cfg: &RunConfig) -> PathBuf {
    PathBuf::from(cfg.output.clone().unwrap_or_else(|| "out".into()))
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    let p = dir.join(name);
    std::fs::write(&p, text)?;
    Ok(p)
}

pub(crate) fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

pub(crate) fn vjson(v: &CVector) -> Value {
    Value::Array(v.iter().map(|z| cjson(*z)).collect())
}

pub(crate) fn mjson(m: &CMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| cjson(m[(i, j)])).collect())).collect())
}

/// Library errors: configuration problems exit 2, everything else is a
/// failed check (exit 1) with the message in the report.
pub(crate) fn classify_error(e: Error) -> Result<Outcome, CliError> {
    match e {
        Error::Input(m) => Err(CliError::Config(m)),
        other => Ok(Outcome { passed: false, report: json!({ "error": other.to_string() }) }),
    }
}
