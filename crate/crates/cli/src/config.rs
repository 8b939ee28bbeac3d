//! Run configuration: a hand-editable TOML document that fully determines a
//! run. Identical configurations (plus seed) reproduce identical outputs.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use sheath_core::diagnostics::WeightSpec;
use sheath_core::dynamics::{InitialFamily, SchemeConfig};
use sheath_core::grid::{HalfLineGrid, Stretching, TransverseAxis};
use sheath_core::model::{algebraic_decay_slope, PlasmaParams};
use sheath_core::stationary::default_grid;

/// Grid specification; `l = None` picks the regime-appropriate default
/// truncation length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub l: Option<f64>,
    pub m: usize,
    pub stretching: StretchConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StretchConfig {
    Uniform,
    Geometric { ratio: f64 },
}

/// Initial perturbation family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialConfig {
    GaussianExp { lambda: f64, amplitude: f64 },
    GaussianAlg {
        lambda: f64,
        /// Weight scale; defaults to Γ·√phi_b when omitted.
        beta: Option<f64>,
        amplitude: f64,
    },
}

/// Flat, hand-editable probe description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// "algebraic" or "exponential".
    pub kind: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub order: usize,
}

/// Optional periodic transverse direction (two-dimensional runs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransverseConfig {
    pub length: f64,
    pub m: usize,
}

/// Quadratic-form checker knobs; defaults are the marginal reference values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QformConfig {
    pub epsilon: Option<f64>,
    pub beta: Option<f64>,
}

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: PlasmaParams,
    pub grid: GridConfig,
    pub scheme: SchemeConfig,
    pub initial: InitialConfig,
    pub probes: Vec<ProbeConfig>,
    pub seed: u64,
    pub transverse: Option<TransverseConfig>,
    pub qform: Option<QformConfig>,
}

impl RunConfig {
    /// Strict-regime reference configuration.
    pub fn reference_nondegenerate() -> Self {
        RunConfig {
            params: PlasmaParams {
                m: 1.0,
                gamma: 5.0 / 3.0,
                r: 1.0,
                t_inf: 1.0,
                u_inf: -2.0,
                phi_b: 0.05,
            },
            grid: GridConfig {
                l: None,
                m: 512,
                stretching: StretchConfig::Uniform,
            },
            scheme: SchemeConfig {
                t_end: 20.0,
                output_cadence: 0.25,
                ..SchemeConfig::default()
            },
            initial: InitialConfig::GaussianExp {
                lambda: 1.0,
                amplitude: 1e-3,
            },
            probes: vec![ProbeConfig {
                kind: "exponential".into(),
                alpha: None,
                beta: None,
                lambda: Some(1.0),
                order: 1,
            }],
            seed: 42,
            transverse: None,
            qform: None,
        }
    }

    /// Marginal-regime reference configuration.
    pub fn reference_degenerate() -> Self {
        let params = PlasmaParams {
            m: 1.0,
            gamma: 5.0 / 3.0,
            r: 1.0,
            t_inf: 1.0,
            u_inf: -(8.0f64 / 3.0).sqrt(),
            phi_b: 0.04,
        };
        let beta = algebraic_decay_slope(&params) * params.phi_b.sqrt();
        RunConfig {
            params,
            grid: GridConfig {
                l: None,
                m: 2048,
                stretching: StretchConfig::Uniform,
            },
            scheme: SchemeConfig {
                t_end: 50.0,
                output_cadence: 0.5,
                ..SchemeConfig::default()
            },
            initial: InitialConfig::GaussianAlg {
                lambda: 4.0,
                beta: None,
                amplitude: 1e-3,
            },
            probes: vec![ProbeConfig {
                kind: "algebraic".into(),
                alpha: Some(1.0),
                beta: Some(beta),
                lambda: None,
                order: 1,
            }],
            seed: 42,
            transverse: None,
            qform: Some(QformConfig {
                epsilon: None,
                beta: None,
            }),
        }
    }

    pub fn from_toml(text: &str) -> anyhow::Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).context("parsing run configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.params
            .validate()
            .map_err(|e| anyhow::anyhow!("params: {e}"))?;
        self.scheme
            .validate()
            .map_err(|e| anyhow::anyhow!("scheme: {e}"))?;
        for p in &self.probes {
            self.probe_spec(p)?;
        }
        Ok(())
    }

    /// Resolve the grid, substituting the default truncation length when
    /// none is given.
    pub fn build_grid(&self) -> anyhow::Result<HalfLineGrid> {
        let stretching = match self.grid.stretching {
            StretchConfig::Uniform => Stretching::Uniform,
            StretchConfig::Geometric { ratio } => Stretching::Geometric { ratio },
        };
        let grid = match self.grid.l {
            Some(l) => HalfLineGrid::from_spec(l, self.grid.m, stretching)?,
            None => {
                let default = default_grid(&self.params, self.grid.m)?;
                HalfLineGrid::from_spec(default.length(), self.grid.m, stretching)?
            }
        };
        Ok(grid)
    }

    pub fn transverse_axes(&self) -> anyhow::Result<Vec<TransverseAxis>> {
        match self.transverse {
            None => Ok(vec![]),
            Some(t) => Ok(vec![TransverseAxis::new(t.length, t.m)?]),
        }
    }

    /// Translate the initial-data section, filling the default weight scale.
    pub fn initial_family(&self) -> (InitialFamily, f64) {
        match self.initial {
            InitialConfig::GaussianExp { lambda, amplitude } => {
                (InitialFamily::GaussianExp { lambda }, amplitude)
            }
            InitialConfig::GaussianAlg {
                lambda,
                beta,
                amplitude,
            } => {
                let beta = beta.unwrap_or_else(|| self.default_beta());
                (InitialFamily::GaussianAlg { lambda, beta }, amplitude)
            }
        }
    }

    /// Γ·√phi_b, the natural weight scale of the marginal regime (falls back
    /// to 1 when phi_b <= 0).
    pub fn default_beta(&self) -> f64 {
        if self.params.phi_b > 0.0 {
            algebraic_decay_slope(&self.params) * self.params.phi_b.sqrt()
        } else {
            1.0
        }
    }

    fn probe_spec(&self, p: &ProbeConfig) -> anyhow::Result<WeightSpec> {
        let spec = match p.kind.as_str() {
            "algebraic" => {
                let alpha = p
                    .alpha
                    .ok_or_else(|| anyhow::anyhow!("probe: algebraic kind needs `alpha`"))?;
                let beta = p.beta.unwrap_or_else(|| self.default_beta());
                WeightSpec::algebraic(alpha, beta, p.order)
            }
            "exponential" => {
                let lambda = p
                    .lambda
                    .ok_or_else(|| anyhow::anyhow!("probe: exponential kind needs `lambda`"))?;
                WeightSpec::exponential(lambda, p.order)
            }
            other => bail!("probe: unknown kind `{other}`"),
        };
        spec.validate().map_err(|e| anyhow::anyhow!("probe: {e}"))?;
        Ok(spec)
    }

    pub fn probe_specs(&self) -> anyhow::Result<Vec<WeightSpec>> {
        self.probes.iter().map(|p| self.probe_spec(p)).collect()
    }
}

/// Apply a `--set key=value` override onto the TOML representation of the
/// config. Dotted keys address nested tables; values are parsed as TOML
/// scalars first and fall back to strings.
pub fn apply_override(cfg: &RunConfig, setting: &str) -> anyhow::Result<RunConfig> {
    fn set_path(
        doc: &mut toml::Value,
        parts: &[&str],
        value: toml::Value,
        full: &str,
    ) -> anyhow::Result<()> {
        let table = doc
            .as_table_mut()
            .ok_or_else(|| anyhow::anyhow!("override key `{full}`: not a table"))?;
        if parts.len() == 1 {
            table.insert(parts[0].to_string(), value);
            Ok(())
        } else {
            let child = table
                .entry(parts[0].to_string())
                .or_insert(toml::Value::Table(Default::default()));
            set_path(child, &parts[1..], value, full)
        }
    }

    let (path, raw) = setting
        .split_once('=')
        .ok_or_else(|| anyhow::anyhow!("override `{setting}` is not of the form key=value"))?;
    let mut doc: toml::Value = toml::Value::try_from(cfg)?;
    let parts: Vec<&str> = path.split('.').collect();
    let value: toml::Value = if let Ok(b) = raw.parse::<bool>() {
        toml::Value::Boolean(b)
    } else if let Ok(n) = raw.parse::<i64>() {
        toml::Value::Integer(n)
    } else if let Ok(f) = raw.parse::<f64>() {
        toml::Value::Float(f)
    } else {
        toml::Value::String(raw.to_string())
    };
    set_path(&mut doc, &parts, value, path)?;
    let next: RunConfig = doc
        .try_into()
        .with_context(|| format!("override key `{path}` produced an invalid configuration"))?;
    next.validate()
        .with_context(|| format!("override key `{path}`"))?;
    Ok(next)
}
