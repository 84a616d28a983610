//! `qsl-lab`: scenario-driven front end for the speed-limit library.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 when a
//! numerical step did not converge (the report is still written).

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::commands::SeriesKind;
use crate::config::{Format, Scenario, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<qsl_core::Error> for CliError {
    fn from(e: qsl_core::Error) -> Self {
        use qsl_core::Error as E;
        match e {
            E::EigNoConvergence { .. } | E::PositivityLost { .. } | E::NonFinite => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qsl-lab", version, about = "Exact and separable quantum speed limits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Scenario flags shared by the subcommands; each overrides the matching
/// key of the `--config` document.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// JSON scenario document.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model identifier: swap, qudit or nmode.
    #[arg(long)]
    pub model: Option<String>,
    /// Swap coupling kappa (1/time).
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Swap overlap magnitude |<a0|b0>|.
    #[arg(long)]
    pub q: Option<f64>,
    /// Phase of the swap overlap.
    #[arg(long, allow_hyphen_values = true)]
    pub q_phase: Option<f64>,
    /// Qudit local dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of modes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of modes carrying the creation operator.
    #[arg(long)]
    pub k_split: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_im: Option<f64>,
    /// Qudit ground energy.
    #[arg(long, allow_hyphen_values = true)]
    pub e0: Option<f64>,
    /// Qudit excited energy.
    #[arg(long, allow_hyphen_values = true)]
    pub eperp: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    /// Integrator step.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of grid points, including t = 0.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Random starts of the separability solver.
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Record wall-clock time in reports (makes them non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

impl ScenarioArgs {
    /// Merges the config file (if any) with the flags.
    pub fn merged(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(m) = &self.model {
            if cfg.model.name.as_deref().is_some_and(|old| old != m) {
                cfg.model.params.clear();
            }
            cfg.model.name = Some(m.clone());
        }
        let params = [
            ("kappa", self.kappa),
            ("q", self.q),
            ("q_phase", self.q_phase),
            ("d", self.d.map(|v| v as f64)),
            ("n", self.n.map(|v| v as f64)),
            ("k_split", self.k_split.map(|v| v as f64)),
            ("gamma_re", self.gamma_re),
            ("gamma_im", self.gamma_im),
            ("e0", self.e0),
            ("eperp", self.eperp),
        ];
        for (k, v) in params {
            if let Some(v) = v {
                cfg.model.params.insert(k.into(), v);
            }
        }
        cfg.hbar = self.hbar.or(cfg.hbar);
        cfg.integrator.dt = self.dt.or(cfg.integrator.dt);
        cfg.integrator.t_max = self.t_max.or(cfg.integrator.t_max);
        cfg.integrator.samples = self.samples.or(cfg.integrator.samples);
        cfg.solver.starts = self.starts.or(cfg.solver.starts);
        cfg.solver.seed = self.seed.or(cfg.solver.seed);
        cfg.solver.tol = self.tol.or(cfg.solver.tol);
        cfg.solver.max_iters = self.max_iters.or(cfg.solver.max_iters);
        cfg.outputs.out = self.out.clone().or(cfg.outputs.out);
        cfg.outputs.format = self.format.or(cfg.outputs.format);
        if self.timing {
            cfg.outputs.timing = Some(true);
        }
        Ok(cfg)
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        Scenario::from_config(&self.merged()?)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact limit, separable bound and speedup ratio of a model.
    Compute(ScenarioArgs),
    /// Exact and separable trajectories with rates, energies and oracle fidelity.
    Evolve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Pauli string (e.g. "zi") whose expectation series is exported.
        #[arg(long)]
        observable: Option<String>,
        /// Which trajectory the exported series follows.
        #[arg(long, value_enum, default_value = "full")]
        series: SeriesKind,
        /// Destination of the "t,expectation" series.
        #[arg(long)]
        series_out: Option<PathBuf>,
    },
    /// Two-time witness test of a "t,expectation" series.
    Witness {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Input CSV with header "t,expectation".
        #[arg(long)]
        input: PathBuf,
        /// Separable bound; computed from the model when absent.
        #[arg(long)]
        qsl_sep: Option<f64>,
        /// Operator norm of the observable.
        #[arg(long, default_value_t = 1.0)]
        l_inf: f64,
        /// Optional CSV of the cone envelope.
        #[arg(long)]
        cone: Option<PathBuf>,
    },
    /// Data files for the three figures.
    Figures {
        /// 1, 2, 3 or all.
        #[arg(long, default_value = "all")]
        which: String,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Speed limits over a range of one model parameter.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Parameter to vary (default: q, d or n depending on the model).
        #[arg(long)]
        param: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
    },
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Compute(args) => commands::cmd_compute(&args.scenario()?),
        Command::Evolve { scenario, observable, series, series_out } => {
            let mut scn = scenario.scenario()?;
            if scenario.format.is_none() && scenario.merged()?.outputs.format.is_none() {
                scn.format = Format::Csv;
            }
            commands::cmd_evolve(&scn, observable.as_deref(), series, series_out.as_deref())
        }
        Command::Witness { scenario, input, qsl_sep, l_inf, cone } => {
            let cfg = scenario.merged()?;
            let scn = if qsl_sep.is_none() { Some(Scenario::from_config(&cfg)?) } else { None };
            commands::cmd_witness(scn.as_ref(), &input, qsl_sep, l_inf, cone.as_deref(), cfg.outputs.out.as_deref())
        }
        Command::Figures { which, out_dir, starts, seed } => {
            let figs: Vec<u8> = match which.as_str() {
                "all" => vec![1, 2, 3],
                "1" | "2" | "3" => vec![which.parse().unwrap()],
                other => return Err(CliError::Usage(format!("unknown figure {other:?}; expected 1, 2, 3 or all"))),
            };
            let defaults = qsl_core::speedlimits::SolverConfig::default();
            let cfg = qsl_core::speedlimits::SolverConfig {
                starts: starts.unwrap_or(defaults.starts),
                seed: seed.unwrap_or(defaults.seed),
                ..defaults
            };
            cfg.validate()?;
            commands::cmd_figures(&figs, &out_dir, &cfg)
        }
        Command::Sweep { scenario, param, from, to, steps } => {
            let cfg = scenario.merged()?;
            let mut scn = Scenario::from_config(&cfg)?;
            if cfg.outputs.format.is_none() {
                scn.format = Format::Csv;
            }
            let param = param.unwrap_or_else(|| commands::default_sweep_param(scn.model.name()).into());
            commands::cmd_sweep(&cfg.model, &scn, &param, from, to, steps)
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("qsl-lab: separability solver did not converge; results flagged in the output");
            EXIT_NUMERICAL
        }
        Err(e) => {
            eprintln!("qsl-lab: {e}");
            e.exit_code()
        }
    }
}
