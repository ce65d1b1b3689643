use serde::{Deserialize, Serialize};

/// Numerical tolerances shared across the pipeline. Every field can be
/// overridden from the run configuration (`--tol.<name>`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub curve: f64,
    pub period: f64,
    pub lattice: f64,
    pub theta_zero: f64,
    pub form: f64,
    pub frame: f64,
    pub proj: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            curve: 1e-10,
            period: 1e-8,
            lattice: 1e-8,
            theta_zero: 1e-7,
            form: 1e-9,
            frame: 1e-9,
            proj: 1e-10,
        }
    }
}

impl Tolerances {
    /// Set a tolerance by its field name.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "curve" => &mut self.curve,
            "period" => &mut self.period,
            "lattice" => &mut self.lattice,
            "theta_zero" => &mut self.theta_zero,
            "form" => &mut self.form,
            "frame" => &mut self.frame,
            "proj" => &mut self.proj,
            _ => return false,
        };
        *slot = value;
        true
    }
}
