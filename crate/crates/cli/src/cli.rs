//! Command-line interface. Exit codes: 0 success, 2 rejected configuration or
//! precondition, 3 numerical failure.

use std::fs;
use std::path::PathBuf;

use clap::{ArgAction, Parser, Subcommand};

use sheath_core::Error as CoreError;

use crate::config::{apply_override, RunConfig};
use crate::runner;

#[derive(Parser, Debug)]
#[command(
    name = "sheath",
    about = "Numerical laboratory for plasma sheaths: stationary profiles, perturbation dynamics, decay diagnostics",
    version
)]
pub struct Cli {
    /// TOML run configuration; a built-in reference preset is used if omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Use the marginal-regime preset instead of the strict-regime one when
    /// no --config is given.
    #[arg(long, global = true)]
    pub preset_degenerate: bool,

    /// Output directory root.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    /// Config overrides, e.g. --set params.phi_b=0.02 (repeatable).
    #[arg(long = "set", global = true, action = ArgAction::Append)]
    pub set: Vec<String>,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Print the existence verdict for the configured parameters.
    Existence,
    /// Build the stationary sheath, export it, verify its spatial decay.
    Stationary,
    /// Evolve the configured perturbation and export the trajectory.
    Simulate,
    /// Run a grid of configurations and aggregate the results.
    Sweep {
        /// Axis of the sweep, e.g. --axis params.phi_b=0.04,0.02,0.01
        /// (repeatable; axes form a cartesian product).
        #[arg(long = "axis", action = ArgAction::Append)]
        axes: Vec<String>,
    },
    /// Evaluate the dissipation quadratic form pointwise.
    Qform {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Print the critical weight exponent over a grid of adiabatic indices.
    Roots {
        /// Print only the limiting value of the critical exponent.
        #[arg(long)]
        gamma_limit: bool,
        /// Comma-separated adiabatic indices.
        #[arg(long)]
        gammas: Option<String>,
    },
    /// Fit a decay law to a column of an existing trajectory CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Column name, e.g. norm_exp_l1_i1.
        #[arg(long)]
        column: String,
        /// exponential | algebraic
        #[arg(long, default_value = "exponential")]
        model: String,
        #[arg(long)]
        beta: Option<f64>,
        /// Fit window "lo:hi" (defaults to the last 80% of the series).
        #[arg(long)]
        window: Option<String>,
    },
}

/// Exit code for an error, looking through anyhow to the numeric core.
fn exit_code_for(err: &anyhow::Error) -> i32 {
    if let Some(core) = err.downcast_ref::<CoreError>() {
        match core {
            CoreError::NoConvergence { .. }
            | CoreError::NumericalBranchFailure { .. }
            | CoreError::CharacteristicViolation { .. }
            | CoreError::NonFinite { .. }
            | CoreError::PositivityLost { .. } => 3,
            _ => 2,
        }
    } else {
        2
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("reading config {}: {e}", path.display()))?;
            RunConfig::from_toml(&text)?
        }
        None if cli.preset_degenerate => RunConfig::reference_degenerate(),
        None => RunConfig::reference_nondegenerate(),
    };
    for setting in &cli.set {
        cfg = apply_override(&cfg, setting)?;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    match &cli.cmd {
        Cmd::Existence => {
            let cfg = load_config(cli)?;
            runner::cmd_existence(&cfg)?;
        }
        Cmd::Stationary => {
            let cfg = load_config(cli)?;
            runner::cmd_stationary(&cfg, &cli.out)?;
        }
        Cmd::Simulate => {
            let cfg = load_config(cli)?;
            runner::cmd_simulate(&cfg, &cli.out)?;
        }
        Cmd::Sweep { axes } => {
            let cfg = load_config(cli)?;
            let axes = axes
                .iter()
                .map(|a| runner::SweepAxis::parse(a))
                .collect::<anyhow::Result<Vec<_>>>()?;
            anyhow::ensure!(!axes.is_empty(), "sweep needs at least one --axis");
            runner::cmd_sweep(&cfg, &axes, &cli.out, cli.jobs)?;
        }
        Cmd::Qform { epsilon, beta } => {
            let cfg = if cli.config.is_none() && !cli.preset_degenerate {
                // the quadratic form lives in the marginal regime
                let mut c = RunConfig::reference_degenerate();
                for setting in &cli.set {
                    c = apply_override(&c, setting)?;
                }
                c
            } else {
                load_config(cli)?
            };
            runner::cmd_qform(&cfg, &cli.out, *epsilon, *beta)?;
        }
        Cmd::Roots { gamma_limit, gammas } => {
            let list = match gammas {
                Some(text) => text
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| anyhow::anyhow!("parsing --gammas: {e}"))?,
                None => vec![1.01, 1.1, 1.2, 1.4, 5.0 / 3.0, 2.0, 2.5, 3.0, 5.0, 10.0, 100.0],
            };
            runner::cmd_roots(&list, *gamma_limit)?;
        }
        Cmd::Fit {
            input,
            column,
            model,
            beta,
            window,
        } => {
            let window = match window {
                Some(text) => {
                    let (lo, hi) = text
                        .split_once(':')
                        .ok_or_else(|| anyhow::anyhow!("--window must be lo:hi"))?;
                    Some((lo.parse::<f64>()?, hi.parse::<f64>()?))
                }
                None => None,
            };
            runner::cmd_fit(input, column, model, *beta, window)?;
        }
    }
    Ok(())
}

/// Entry point shared by the binary and the test suite.
pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version through this path
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code_for(&err)
        }
    }
}
