//! Run configuration shared by the CLI, fixtures and tests.

use serde::{Deserialize, Serialize};

use crate::curve::{CurvePoint, CurveSpec, SpectralCurve};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::spectral::{Divisor, SpectralData, Target};
use crate::synth::Domain;
use crate::tol::Tolerances;

/// A point on the curve: `{"x": [re, im], "sheet": s}` or `{"infinity": s}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Finite {
        x: C64,
        #[serde(default)]
        sheet: i8,
    },
    Infinity {
        infinity: i8,
    },
}

impl PointSpec {
    pub fn point(&self) -> CurvePoint {
        match *self {
            PointSpec::Finite { x, sheet } => CurvePoint::Finite { x, sheet },
            PointSpec::Infinity { infinity } => CurvePoint::Infinity { sheet: infinity },
        }
    }

    pub fn real(x: f64) -> Self {
        PointSpec::Finite { x: C64::new(x, 0.0), sheet: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorEntry {
    pub point: PointSpec,
    #[serde(default = "one_i32")]
    pub mult: i32,
}

fn one_i32() -> i32 {
    1
}

fn one_f64() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Exact,
    Theta,
    Both,
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Engine::Exact),
            "theta" => Ok(Engine::Theta),
            "both" => Ok(Engine::Both),
            _ => Err(Error::Input(format!("unknown engine {s:?}"))),
        }
    }
}

pub fn parse_target(s: &str) -> Result<Target> {
    match s {
        "grassmannian" | "gr" => Ok(Target::Grassmannian),
        "projective_unitary" | "pu" => Ok(Target::ProjectiveUnitary),
        _ => Err(Error::Input(format!("unknown target {s:?}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    pub curve: CurveSpec,
    pub line_divisor: Vec<DivisorEntry>,
    pub target: Target,
    pub k: usize,
    #[serde(default)]
    pub designated: Option<Vec<PointSpec>>,
    #[serde(default = "one_f64")]
    pub form_scale: f64,
    pub domain: Domain,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub engine: Engine,
    /// Theta-engine constants `c_i`; calibrated when absent.
    #[serde(default)]
    pub constants: Option<Vec<C64>>,
    #[serde(default)]
    pub output: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn curve(&self) -> Result<SpectralCurve> {
        SpectralCurve::from_spec(&self.curve)
    }

    pub fn divisor(&self) -> Divisor {
        self.line_divisor.iter().map(|e| (e.point.point(), e.mult)).collect()
    }

    pub fn spectral_data(&self) -> Result<SpectralData> {
        let designated = self.designated.as_ref().map(|v| v.iter().map(|p| p.point()).collect());
        SpectralData::new(self.curve()?, self.divisor(), self.k, self.target, designated, self.form_scale)
    }

    /// Engine/curve compatibility: exact needs genus 0, theta needs n = 1 or genus 0.
    pub fn check_engine(&self, curve: &SpectralCurve) -> Result<()> {
        let g = curve.genus();
        let n = curve.degree() - 1;
        let exact = matches!(self.engine, Engine::Exact | Engine::Both);
        let theta = matches!(self.engine, Engine::Theta | Engine::Both);
        if exact && g != 0 {
            return Err(Error::Input(format!("exact engine requires genus 0, curve has genus {g}")));
        }
        if theta && !(n == 1 || g == 0) {
            return Err(Error::Input(format!("theta engine requires n = 1 or genus 0 (n = {n}, g = {g})")));
        }
        if theta && self.target != Target::Grassmannian {
            return Err(Error::Input("theta engine produces grassmannian maps only".into()));
        }
        Ok(())
    }
}
