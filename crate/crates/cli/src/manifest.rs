//! Run manifests: a JSON sidecar recording the full configuration, derived
//! quantities, produced files, build identity, and wall-clock time. Written
//! atomically at run end.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde::Serialize;

use sheath_core::model::{
    algebraic_decay_slope, classify_regime, solve_lambda0, PlasmaParams,
};
use sheath_core::sagdeev::SagdeevContext;

use crate::config::RunConfig;

/// Quantities derived from the parameters alone.
#[derive(Debug, Clone, Serialize)]
pub struct DerivedQuantities {
    pub regime: String,
    /// Γ, the algebraic tail slope.
    pub decay_slope: f64,
    /// Critical weight exponent for this adiabatic index.
    pub lambda0: f64,
    /// Critical density of the stationary map.
    pub c_inf: f64,
    /// V''(0), the far-field curvature of the Sagdeev potential.
    pub v_curvature: f64,
}

pub fn derived_quantities(params: &PlasmaParams) -> anyhow::Result<DerivedQuantities> {
    let ctx = SagdeevContext::new(params)?;
    Ok(DerivedQuantities {
        regime: classify_regime(params).name().to_string(),
        decay_slope: algebraic_decay_slope(params),
        lambda0: solve_lambda0(params.gamma)?,
        c_inf: ctx.c_inf,
        v_curvature: ctx.v_curvature_at_zero(),
    })
}

/// Echo of the resolved grid.
#[derive(Debug, Clone, Serialize)]
pub struct GridEcho {
    pub length: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub derived: DerivedQuantities,
    pub grid: GridEcho,
    pub files: Vec<String>,
    pub wall_ms: u128,
    pub status: String,
    pub build: String,
}

/// Best-effort build identity.
pub fn build_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

/// Serialize and atomically move the manifest into place.
pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    let tmp = dir.join("manifest.json.tmp");
    let target = dir.join("manifest.json");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, &target)?;
    Ok(())
}
