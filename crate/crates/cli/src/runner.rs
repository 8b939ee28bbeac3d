//! Run orchestration: resolve a configuration into profile builds, potential
//! checks, evolutions, and sweeps, with artifacts written under one run
//! directory per configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;

use sheath_core::diagnostics::{
    fit_decay, qform_check, write_qform_csv, DecayFit, DecayModel, QFormReport,
};
use sheath_core::dynamics::{evolve, make_initial, write_trajectory_csv, Trajectory};
use sheath_core::model::Regime;
use sheath_core::sagdeev::{existence_check, ExistenceVerdict};
use sheath_core::stationary::{
    build_profile, profile_residuals, verify_degenerate_asymptotics, verify_nondegenerate_decay,
    write_profile_csv, StationaryProfile,
};

use crate::config::{apply_override, RunConfig};
use crate::manifest::{
    build_describe, derived_quantities, write_manifest, GridEcho, RunManifest,
};

/// Deterministic run identifier: FNV-1a hash of the canonical configuration.
pub fn run_id(cfg: &RunConfig) -> String {
    let text = cfg.to_toml().unwrap_or_default();
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("run-{hash:016x}")
}

pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub trajectory: Option<Trajectory>,
}

fn prepare_dir(out_root: &Path, cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let dir = out_root.join(run_id(cfg));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Print-only existence verdict.
pub fn cmd_existence(cfg: &RunConfig) -> anyhow::Result<ExistenceVerdict> {
    let verdict = existence_check(&cfg.params)?;
    println!("regime={}", verdict.regime.name());
    println!("cond_V={:.6e}", verdict.cond_v);
    println!("cond_f={:.6e}", verdict.cond_f);
    println!("exists_monotone={}", verdict.exists_monotone);
    Ok(verdict)
}

/// Build the sheath, export it, and verify its spatial decay for the regime.
pub fn cmd_stationary(cfg: &RunConfig, out_root: &Path) -> anyhow::Result<RunOutput> {
    let started = Instant::now();
    let dir = prepare_dir(out_root, cfg)?;
    let grid = cfg.build_grid()?;
    let profile = build_profile(&cfg.params, &grid)?;

    let mut files = vec!["profile.csv".to_string()];
    let mut file = fs::File::create(dir.join("profile.csv"))?;
    write_profile_csv(&profile, &mut file)?;

    let residuals = profile_residuals(&profile, &cfg.params)?;
    println!("first_integral_residual={:.3e}", residuals.first_integral);
    println!("poisson_fd_residual={:.3e}", residuals.poisson_fd);

    match profile.regime {
        Regime::NondegenerateBohm => {
            let rep = verify_nondegenerate_decay(&profile, &cfg.params)?;
            println!(
                "tail_rate={:.6} predicted={:.6} r2={:.6}",
                rep.fit.rate, rep.predicted_rate, rep.fit.r_squared
            );
        }
        Regime::DegenerateBohm => {
            let rep = verify_degenerate_asymptotics(&profile, &cfg.params)?;
            println!("sup_potential_i0={:.6e}", rep.sup_potential[0]);
            println!("sup_potential_i1={:.6e}", rep.sup_potential[1]);
            println!("sup_potential_i2={:.6e}", rep.sup_potential[2]);
            println!("sup_potential_i3={:.6e}", rep.sup_potential[3]);
            println!("max_all={:.6e}", rep.max_all());
        }
        _ => println!("no decay verification for regime {}", profile.regime.name()),
    }

    let manifest = RunManifest {
        config: cfg.clone(),
        derived: derived_quantities(&cfg.params)?,
        grid: GridEcho {
            length: grid.length(),
            cells: grid.m(),
        },
        files: {
            files.push("manifest.json".into());
            files
        },
        wall_ms: started.elapsed().as_millis(),
        status: "ok".into(),
        build: build_describe(),
    };
    write_manifest(&dir, &manifest)?;
    Ok(RunOutput {
        dir,
        manifest,
        trajectory: None,
    })
}

/// Full evolution run: profile, initial data, time stepping, exports.
pub fn cmd_simulate(cfg: &RunConfig, out_root: &Path) -> anyhow::Result<RunOutput> {
    let started = Instant::now();
    let dir = prepare_dir(out_root, cfg)?;
    let grid = cfg.build_grid()?;
    let profile = build_profile(&cfg.params, &grid)?;
    let axes = cfg.transverse_axes()?;
    let (family, amplitude) = cfg.initial_family();
    let probes = cfg.probe_specs()?;

    let state0 = make_initial(
        family,
        amplitude,
        &profile,
        &cfg.params,
        &axes,
        cfg.seed,
        cfg.scheme.poisson_tol,
    )?;
    let trajectory = evolve(state0, &profile, &cfg.params, &cfg.scheme, &probes, &axes)?;

    let mut file = fs::File::create(dir.join("profile.csv"))?;
    write_profile_csv(&profile, &mut file)?;
    let mut file = fs::File::create(dir.join("trajectory.csv"))?;
    write_trajectory_csv(&trajectory, &mut file)?;

    println!(
        "steps={} rows={} final_t={:.6}",
        trajectory.steps,
        trajectory.rows.len(),
        trajectory.rows.last().map(|r| r.t).unwrap_or(0.0)
    );

    let manifest = RunManifest {
        config: cfg.clone(),
        derived: derived_quantities(&cfg.params)?,
        grid: GridEcho {
            length: grid.length(),
            cells: grid.m(),
        },
        files: vec![
            "profile.csv".into(),
            "trajectory.csv".into(),
            "manifest.json".into(),
        ],
        wall_ms: started.elapsed().as_millis(),
        status: "ok".into(),
        build: build_describe(),
    };
    write_manifest(&dir, &manifest)?;
    Ok(RunOutput {
        dir,
        manifest,
        trajectory: Some(trajectory),
    })
}

/// Quadratic-form positivity report.
pub fn cmd_qform(
    cfg: &RunConfig,
    out_root: &Path,
    epsilon: Option<f64>,
    beta: Option<f64>,
) -> anyhow::Result<(RunOutput, QFormReport)> {
    let started = Instant::now();
    let dir = prepare_dir(out_root, cfg)?;
    let grid = cfg.build_grid()?;
    let qcfg = cfg.qform.unwrap_or(crate::config::QformConfig {
        epsilon: None,
        beta: None,
    });
    let eps = epsilon.or(qcfg.epsilon).unwrap_or(4.0);
    let beta = beta.or(qcfg.beta).unwrap_or_else(|| cfg.default_beta());

    let report = qform_check(eps, beta, &cfg.params, &grid)?;
    let mut file = fs::File::create(dir.join("qform.csv"))?;
    write_qform_csv(&report, &mut file)?;

    println!("epsilon={eps} beta={beta} lambda0={:.6}", report.lambda0);
    println!(
        "all44={} all45={} all46={}",
        report.all44(),
        report.all45(),
        report.all46()
    );
    println!("margin46={:.6e}", report.margin46);
    println!("min_scaled_eig={:.6e}", report.min_scaled_eig);
    println!("eigen_agrees={}", report.eigen_agrees_with_flags());

    let manifest = RunManifest {
        config: cfg.clone(),
        derived: derived_quantities(&cfg.params)?,
        grid: GridEcho {
            length: grid.length(),
            cells: grid.m(),
        },
        files: vec!["qform.csv".into(), "manifest.json".into()],
        wall_ms: started.elapsed().as_millis(),
        status: "ok".into(),
        build: build_describe(),
    };
    write_manifest(&dir, &manifest)?;
    Ok((
        RunOutput {
            dir,
            manifest,
            trajectory: None,
        },
        report,
    ))
}

/// Critical-exponent table.
pub fn cmd_roots(gammas: &[f64], limit_only: bool) -> anyhow::Result<()> {
    if limit_only {
        let l = sheath_core::model::solve_lambda0_limit()?;
        println!("lambda0_limit={l:.6}");
        return Ok(());
    }
    println!("gamma,lambda0");
    for &g in gammas {
        let l = sheath_core::model::solve_lambda0(g)?;
        println!("{g},{l:.10}");
    }
    Ok(())
}

/// Fit a decay law to a column of an existing trajectory CSV.
pub fn cmd_fit(
    input: &Path,
    column: &str,
    model: &str,
    beta: Option<f64>,
    window: Option<(f64, f64)>,
) -> anyhow::Result<DecayFit> {
    let text = fs::read_to_string(input)
        .with_context(|| format!("reading trajectory {}", input.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty trajectory file")?;
    let cols: Vec<&str> = header.split(',').collect();
    let t_idx = cols
        .iter()
        .position(|c| *c == "t")
        .context("no `t` column")?;
    let v_idx = cols
        .iter()
        .position(|c| *c == column)
        .with_context(|| format!("no `{column}` column in {header}"))?;
    let mut series = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let t: f64 = fields[t_idx].parse()?;
        let v: f64 = fields[v_idx].parse()?;
        series.push((t, v));
    }
    let t_max = series.iter().map(|(t, _)| *t).fold(0.0f64, f64::max);
    let window = window.unwrap_or((0.2 * t_max, t_max));
    let model = match model {
        "exponential" | "exp" => DecayModel::Exponential,
        "algebraic" | "alg" => DecayModel::Algebraic {
            beta: beta.context("algebraic fit needs --beta")?,
        },
        other => anyhow::bail!("unknown fit model `{other}`"),
    };
    let fit = fit_decay(&series, model, Some(window))?;
    println!(
        "rate={:.8} amplitude={:.6e} r2={:.6} window=[{:.3},{:.3}] clipped={}",
        fit.rate, fit.amplitude, fit.r_squared, fit.window.0, fit.window.1, fit.clipped
    );
    Ok(fit)
}

/// One axis of a sweep: a dotted config key plus the list of values.
#[derive(Debug, Clone)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl SweepAxis {
    /// Parse "key=v1,v2,v3".
    pub fn parse(text: &str) -> anyhow::Result<SweepAxis> {
        let (key, vals) = text
            .split_once('=')
            .ok_or_else(|| anyhow::anyhow!("axis `{text}` is not of the form key=v1,v2"))?;
        let values: Vec<String> = vals.split(',').map(|s| s.trim().to_string()).collect();
        anyhow::ensure!(!values.is_empty(), "axis `{key}` has no values");
        Ok(SweepAxis {
            key: key.to_string(),
            values,
        })
    }
}

/// Outcome row of one sweep member.
pub struct SweepRow {
    pub run_id: String,
    pub axis_values: Vec<String>,
    pub status: String,
    pub final_norms: Vec<f64>,
    pub fitted_rates: Vec<f64>,
}

/// Run the cartesian product of the axes over the template configuration.
/// Each member is fully isolated in its own directory; failures become rows,
/// never aborts. With `jobs > 1` members run in parallel; the aggregate is
/// written in deterministic member order regardless.
pub fn cmd_sweep(
    template: &RunConfig,
    axes: &[SweepAxis],
    out_root: &Path,
    jobs: usize,
) -> anyhow::Result<PathBuf> {
    let mut combos: Vec<Vec<String>> = vec![vec![]];
    for axis in axes {
        let mut next = Vec::new();
        for combo in &combos {
            for v in &axis.values {
                let mut c = combo.clone();
                c.push(v.clone());
                next.push(c);
            }
        }
        combos = next;
    }

    let configs: Vec<anyhow::Result<RunConfig>> = combos
        .iter()
        .map(|combo| {
            let mut cfg = template.clone();
            for (axis, value) in axes.iter().zip(combo.iter()) {
                cfg = apply_override(&cfg, &format!("{}={}", axis.key, value))?;
            }
            Ok(cfg)
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let rows: Vec<SweepRow> = pool.install(|| {
        configs
            .par_iter()
            .zip(combos.par_iter())
            .map(|(cfg, combo)| match cfg {
                Err(e) => SweepRow {
                    run_id: "invalid".into(),
                    axis_values: combo.clone(),
                    status: format!("config-error: {e:#}").replace(',', ";"),
                    final_norms: vec![],
                    fitted_rates: vec![],
                },
                Ok(cfg) => match cmd_simulate(cfg, out_root) {
                    Ok(out) => {
                        let traj = out.trajectory.as_ref().unwrap();
                        let final_norms = traj
                            .rows
                            .last()
                            .map(|r| r.norms.clone())
                            .unwrap_or_default();
                        let t_max = traj.rows.last().map(|r| r.t).unwrap_or(0.0);
                        let fitted_rates = (0..traj.probe_ids.len())
                            .map(|k| {
                                let series: Vec<(f64, f64)> =
                                    traj.rows.iter().map(|r| (r.t, r.norms[k])).collect();
                                fit_decay(
                                    &series,
                                    DecayModel::Exponential,
                                    Some((0.2 * t_max, t_max)),
                                )
                                .map(|f| f.rate)
                                .unwrap_or(f64::NAN)
                            })
                            .collect();
                        SweepRow {
                            run_id: run_id(cfg),
                            axis_values: combo.clone(),
                            status: "ok".into(),
                            final_norms,
                            fitted_rates,
                        }
                    }
                    Err(e) => SweepRow {
                        run_id: run_id(cfg),
                        axis_values: combo.clone(),
                        status: format!("failed: {e:#}").replace(',', ";"),
                        final_norms: vec![],
                        fitted_rates: vec![],
                    },
                },
            })
            .collect()
    });

    fs::create_dir_all(out_root)?;
    let path = out_root.join("sweep.csv");
    let mut file = fs::File::create(&path)?;
    write!(file, "run_id")?;
    for axis in axes {
        write!(file, ",{}", axis.key)?;
    }
    let n_probes = template.probes.len();
    for k in 0..n_probes {
        write!(file, ",final_norm_{k}")?;
    }
    for k in 0..n_probes {
        write!(file, ",fitted_rate_{k}")?;
    }
    writeln!(file, ",status")?;
    for row in &rows {
        write!(file, "{}", row.run_id)?;
        for v in &row.axis_values {
            write!(file, ",{v}")?;
        }
        for k in 0..n_probes {
            match row.final_norms.get(k) {
                Some(v) => write!(file, ",{v:.16e}")?,
                None => write!(file, ",")?,
            }
        }
        for k in 0..n_probes {
            match row.fitted_rates.get(k) {
                Some(v) => write!(file, ",{v:.16e}")?,
                None => write!(file, ",")?,
            }
        }
        writeln!(file, ",{}", row.status)?;
    }
    println!("sweep rows={} -> {}", rows.len(), path.display());
    Ok(path)
}

/// Re-export for tests: build the profile for a config.
pub fn build_profile_for(cfg: &RunConfig) -> anyhow::Result<StationaryProfile> {
    let grid = cfg.build_grid()?;
    Ok(build_profile(&cfg.params, &grid)?)
}
