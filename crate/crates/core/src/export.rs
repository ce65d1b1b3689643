//! Plot-ready output: CSV grids and a JSON mesh with a metadata block.
//! Floats are written with 17 significant digits so output is byte-stable.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::synth::{Domain, MapGrid};
use crate::tol::Tolerances;

pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0"
        return "0.0000000000000000e0".into();
    }
    format!("{x:.16e}")
}

/// Entries of a node value, row-major.
fn entries(m: &crate::linalg::CMatrix) -> Vec<crate::linalg::C64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Header `x,y,re0,im0,re1,im1,…` then one row per node in index order.
pub fn grid_csv(map: &MapGrid) -> String {
    let width = map.values.first().map(|m| m.len()).unwrap_or(0);
    let mut out = String::from("x,y");
    for e in 0..width {
        let _ = write!(out, ",re{e},im{e}");
    }
    out.push('\n');
    for (i, v) in map.values.iter().enumerate() {
        let (x, y) = map.domain.node(i);
        out.push_str(&fmt_f64(x));
        out.push(',');
        out.push_str(&fmt_f64(y));
        for z in entries(v) {
            out.push(',');
            out.push_str(&fmt_f64(z.re));
            out.push(',');
            out.push_str(&fmt_f64(z.im));
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshMetadata {
    pub config_hash: String,
    pub engine: String,
    pub target: String,
    pub tolerances: Tolerances,
    pub domain: Domain,
    /// Engine-specific extras (periods, calibration, alignment residual, …).
    #[serde(default)]
    pub extra: serde_json::Value,
}

/// `{"metadata": …, "shape": [rows, cols], "values": [[re, im, …], …]}`.
pub fn mesh_json(map: &MapGrid, meta: &MeshMetadata) -> String {
    let (rows, cols) = map.values.first().map(|m| m.shape()).unwrap_or((0, 0));
    let mut out = String::from("{\n\"metadata\": ");
    out.push_str(&serde_json::to_string_pretty(meta).expect("metadata serializes"));
    let _ = write!(out, ",\n\"shape\": [{rows}, {cols}],\n\"values\": [\n");
    for (i, v) in map.values.iter().enumerate() {
        out.push('[');
        let parts: Vec<String> = entries(v).iter().flat_map(|z| [fmt_f64(z.re), fmt_f64(z.im)]).collect();
        out.push_str(&parts.join(", "));
        out.push(']');
        if i + 1 < map.values.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]\n}\n");
    out
}

/// Reads back the metadata block of a mesh file.
pub fn read_mesh_metadata(text: &str) -> crate::error::Result<MeshMetadata> {
    #[derive(Deserialize)]
    struct Head {
        metadata: MeshMetadata,
    }
    let h: Head = serde_json::from_str(text).map_err(|e| crate::error::Error::Input(format!("mesh: {e}")))?;
    Ok(h.metadata)
}
