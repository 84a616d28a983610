//! The subcommands. Each returns the documents it wrote plus a flag saying
//! whether every numerical step converged, so the caller can pick the exit
//! code after the output is safely on disk.

use std::f64::consts::SQRT_2;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use qsl_core::dynamics::{
    cone_bounds, evolve_full, evolve_separable, expectation_series, rate_full, rate_separable, witness_check,
    WitnessVerdict,
};
use qsl_core::linalg::pauli_string;
use qsl_core::models::{
    analytic_rates, build_swap, nmode_separability_extremes, nmode_speedup, pair_flow_solution,
    qudit_separability_extremes, qudit_speedup, swap_crossover_overlap, swap_limits, time_scale_note, PairFlow,
    SwapModelParams,
};
use qsl_core::speedlimits::{qsl_sep_bound, SolverConfig, SpeedReport, SpeedupRatio, RESIDUAL_RTOL};
use qsl_core::ProductState;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{resolve_model, Format, ModelSection, ModelSpec, Scenario};
use crate::output::{csv_bytes, emit, json_bytes, num, read_series, write_csv, write_json};
use crate::CliError;

pub const TOOL: &str = "qsl-lab";

/// Closed-form values the numerical report can be audited against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub qsl: f64,
    pub qsl_sep_plus: f64,
    pub ratio: f64,
    pub e_min_sep: f64,
    pub e_max_sep: f64,
}

pub fn closed_form(model: &ModelSpec, hbar: f64) -> Result<ClosedForm, CliError> {
    Ok(match model {
        ModelSpec::Swap(p) => {
            let (qsl, sep) = swap_limits(p);
            let half = hbar * p.kappa / 2.0;
            ClosedForm { qsl, qsl_sep_plus: sep, ratio: SQRT_2, e_min_sep: -half.abs(), e_max_sep: half.abs() }
        }
        ModelSpec::Qudit(p) => {
            let (lo, hi) = qudit_separability_extremes(p)?;
            ClosedForm {
                qsl: (p.e_perp - p.e0) / hbar,
                qsl_sep_plus: SQRT_2 * (hi - lo) / hbar,
                ratio: qudit_speedup(p.d),
                e_min_sep: lo,
                e_max_sep: hi,
            }
        }
        ModelSpec::Nmode(p) => {
            let (lo, hi) = nmode_separability_extremes(p)?;
            ClosedForm {
                qsl: 2.0 * p.gamma.norm() / hbar,
                qsl_sep_plus: (p.n_parties as f64).sqrt() * (hi - lo) / hbar,
                ratio: nmode_speedup(p.n_parties),
                e_min_sep: lo,
                e_max_sep: hi,
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub starts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub residual_rtol: f64,
    /// Sweeps used by the winning runs for the maximum and the minimum.
    pub solver_iterations: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub model: ModelSpec,
    pub time_scale: String,
    #[serde(flatten)]
    pub report: SpeedReport,
    pub closed_form: ClosedForm,
    pub provenance: Provenance,
}

pub fn compute_report(scn: &Scenario) -> Result<ReportDocument, CliError> {
    let start = Instant::now();
    let h = scn.model.hamiltonian(scn.hbar)?;
    let report = qsl_sep_bound(&h, &scn.model.space()?, &scn.solver, scn.hbar)?;
    let provenance = Provenance {
        seed: scn.solver.seed,
        starts: scn.solver.starts,
        max_iters: scn.solver.max_iters,
        tol: scn.solver.tol,
        residual_rtol: RESIDUAL_RTOL,
        solver_iterations: [report.max_pair.iterations, report.min_pair.iterations],
        wall_time_s: scn.timing.then(|| start.elapsed().as_secs_f64()),
    };
    Ok(ReportDocument {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        model: scn.model.clone(),
        time_scale: time_scale_note(scn.model.name()).into(),
        closed_form: closed_form(&scn.model, scn.hbar)?,
        report,
        provenance,
    })
}

fn ratio_text(r: &SpeedupRatio) -> String {
    match r {
        SpeedupRatio::Finite(x) => num(*x),
        SpeedupRatio::Unbounded => "inf".into(),
    }
}

/// Writes the report; returns whether the solver converged.
pub fn cmd_compute(scn: &Scenario) -> Result<bool, CliError> {
    let doc = compute_report(scn)?;
    let out = scn.out.as_deref();
    match scn.format {
        Format::Json => write_json(out, &doc)?,
        Format::Csv => {
            let r = &doc.report;
            let rows: Vec<Vec<String>> = [
                ("qsl", num(r.qsl)),
                ("qsl_sep_plus", num(r.qsl_sep_plus)),
                ("ratio", ratio_text(&r.ratio)),
                ("e_min", num(r.e_min)),
                ("e_max", num(r.e_max)),
                ("e_min_sep", num(r.e_min_sep)),
                ("e_max_sep", num(r.e_max_sep)),
                ("ratio_closed_form", num(doc.closed_form.ratio)),
                ("converged", r.converged.to_string()),
                ("seed", doc.provenance.seed.to_string()),
                ("starts", doc.provenance.starts.to_string()),
            ]
            .into_iter()
            .map(|(k, v)| vec![k.to_string(), v])
            .collect();
            write_csv(out, &["field", "value"], &rows)?;
        }
    }
    Ok(doc.report.converged)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveRow {
    pub t: f64,
    pub rate_full: f64,
    pub rate_sep: f64,
    pub energy_full: f64,
    pub energy_sep: f64,
    pub fidelity_to_oracle: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SeriesKind {
    Full,
    Sep,
}

pub struct EvolveOutput {
    pub rows: Vec<EvolveRow>,
    pub full_states: Vec<Vec<Complex64>>,
    pub sep_states: Vec<Vec<Complex64>>,
}

/// Closed-form separable state at time `t`, where one exists.
fn oracle_state(model: &ModelSpec, start: &ProductState, t: f64, hbar: f64) -> Result<Option<ProductState>, CliError> {
    let (flow, tau) = match model {
        ModelSpec::Swap(p) => (PairFlow::Swap, p.tau(t)),
        ModelSpec::Qudit(p) => (PairFlow::Projector, p.tau(t, hbar)),
        ModelSpec::Nmode(_) => return Ok(None),
    };
    let (a, b) = pair_flow_solution(flow, start.local(0), start.local(1), tau)?;
    Ok(Some(ProductState::normalized(start.space().clone(), vec![a, b])?))
}

pub fn run_evolve(scn: &Scenario) -> Result<EvolveOutput, CliError> {
    let h = scn.model.hamiltonian(scn.hbar)?;
    let start = scn.model.initial_state(scn.hbar, scn.solver.seed)?;
    let times = scn.grid();
    let dt = scn.step(&h)?;
    let full = evolve_full(&h, &start.embed(), &times, scn.hbar)?;
    let sep = evolve_separable(&h, &start, &times, dt, scn.hbar)?;
    let mut rows = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let fidelity = oracle_state(&scn.model, &start, t, scn.hbar)?.map(|o| o.fidelity(&sep.states[k]));
        rows.push(EvolveRow {
            t,
            rate_full: full.rates[k],
            rate_sep: sep.rates[k],
            energy_full: full.energies[k],
            energy_sep: sep.energies[k],
            fidelity_to_oracle: fidelity,
        });
    }
    Ok(EvolveOutput {
        rows,
        full_states: full.states.into_iter().map(|s| s.into_vector()).collect(),
        sep_states: sep.states.iter().map(|s| s.embed().into_vector()).collect(),
    })
}

pub const EVOLVE_HEADER: [&str; 6] = ["t", "rate_full", "rate_sep", "energy_full", "energy_sep", "fidelity_to_oracle"];

pub fn cmd_evolve(
    scn: &Scenario,
    observable: Option<&str>,
    series: SeriesKind,
    series_out: Option<&Path>,
) -> Result<bool, CliError> {
    let qubits = match &scn.model {
        ModelSpec::Qudit(p) if p.d != 2 => None,
        _ => Some(scn.model.space()?.parties()),
    };
    let obs = match (observable, series_out) {
        (None, None) => None,
        (label, _) => {
            let n = qubits.ok_or_else(|| CliError::Usage("Pauli observables need a qubit model".into()))?;
            let label = label.map(str::to_owned).unwrap_or_else(|| format!("z{}", "i".repeat(n - 1)));
            if label.len() != n {
                return Err(CliError::Usage(format!("observable {label:?} must have {n} Pauli labels")));
            }
            Some(pauli_string(&label).map_err(|e| CliError::Usage(format!("observable {label:?}: {e}")))?)
        }
    };

    let out = run_evolve(scn)?;
    match scn.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = out
                .rows
                .iter()
                .map(|r| {
                    vec![
                        num(r.t),
                        num(r.rate_full),
                        num(r.rate_sep),
                        num(r.energy_full),
                        num(r.energy_sep),
                        r.fidelity_to_oracle.map(num).unwrap_or_default(),
                    ]
                })
                .collect();
            write_csv(scn.out.as_deref(), &EVOLVE_HEADER, &rows)?;
        }
        Format::Json => write_json(scn.out.as_deref(), &out.rows)?,
    }
    if let Some(obs) = obs {
        let states = match series {
            SeriesKind::Full => &out.full_states,
            SeriesKind::Sep => &out.sep_states,
        };
        let values = expectation_series(states, &obs)?;
        let rows: Vec<Vec<String>> =
            out.rows.iter().zip(&values).map(|(r, v)| vec![num(r.t), num(*v)]).collect();
        let path = series_out.ok_or_else(|| CliError::Usage("--observable needs --series-out".into()))?;
        write_csv(Some(path), &["t", "expectation"], &rows)?;
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessDocument {
    pub tool: String,
    pub input: PathBuf,
    pub samples: usize,
    pub qsl_sep_plus: f64,
    pub l_inf: f64,
    #[serde(flatten)]
    pub verdict: WitnessVerdict,
}

/// Checks an external series against the separable cone. The bound is taken
/// from `qsl_sep` when given, otherwise computed for the scenario's model.
pub fn cmd_witness(
    scn: Option<&Scenario>,
    input: &Path,
    qsl_sep: Option<f64>,
    l_inf: f64,
    cone: Option<&Path>,
    out: Option<&Path>,
) -> Result<bool, CliError> {
    let series = read_series(input)?;
    let (bound, converged) = match (qsl_sep, scn) {
        (Some(b), _) => (b, true),
        (None, Some(scn)) => {
            let h = scn.model.hamiltonian(scn.hbar)?;
            let r = qsl_sep_bound(&h, &scn.model.space()?, &scn.solver, scn.hbar)?;
            (r.qsl_sep_plus, r.converged)
        }
        (None, None) => return Err(CliError::Usage("give --qsl-sep or a model to compute it".into())),
    };
    let verdict = witness_check(&series, bound, l_inf).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(path) = cone {
        let times: Vec<f64> = series.iter().map(|p| p.0).collect();
        let env = cone_bounds(series[0].1, bound, l_inf, &times)?;
        let rows: Vec<Vec<String>> = (0..times.len())
            .map(|k| vec![num(times[k]), num(series[k].1), num(env.lower[k]), num(env.upper[k])])
            .collect();
        write_csv(Some(path), &["t", "expectation", "lower", "upper"], &rows)?;
    }
    let doc = WitnessDocument {
        tool: TOOL.into(),
        input: input.to_path_buf(),
        samples: series.len(),
        qsl_sep_plus: bound,
        l_inf,
        verdict,
    };
    write_json(out, &doc)?;
    Ok(converged)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureMeta {
    pub figure: u8,
    pub title: String,
    pub columns: Vec<String>,
    pub y_scale: String,
    pub notes: Vec<String>,
    /// Largest deviation between numeric and closed-form columns, relative
    /// to `max(|closed form|, 1)`.
    pub max_rel_deviation: f64,
    pub solver: SolverConfig,
    pub converged: bool,
}

fn rel_dev(numeric: f64, closed: f64) -> f64 {
    (numeric - closed).abs() / closed.abs().max(1.0)
}

pub struct Figure {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub meta: FigureMeta,
}

/// Exact and separable rates of the swap model against `|q|` (`kappa = 1`).
pub fn figure1(cfg: &SolverConfig) -> Result<Figure, CliError> {
    let base = SwapModelParams::new(1.0, Complex64::new(0.0, 0.0))?;
    let (h, _) = build_swap(&base, 1.0)?;
    let space = ModelSpec::Swap(base).space()?;
    let report = qsl_sep_bound(&h, &space, cfg, 1.0)?;
    let (qsl_closed, sep_closed) = swap_limits(&base);
    let mut dev = rel_dev(report.qsl, qsl_closed).max(rel_dev(report.qsl_sep_plus, sep_closed));
    let mut rows = Vec::new();
    for k in 0..=100 {
        let q = k as f64 / 100.0;
        let p = SwapModelParams::new(1.0, Complex64::new(q, 0.0))?;
        let (h, st) = build_swap(&p, 1.0)?;
        let full = rate_full(&h, &st.embed(), 1.0)?.rate;
        let sep = rate_separable(&h, &st, 1.0)?.rate;
        let (full_c, sep_c) = analytic_rates(&p);
        dev = dev.max(rel_dev(full, full_c)).max(rel_dev(sep, sep_c));
        rows.push(vec![q, full, full_c, sep, sep_c, report.qsl, qsl_closed, report.qsl_sep_plus, sep_closed]);
    }
    let header = vec![
        "abs_q",
        "rate_full",
        "rate_full_closed",
        "rate_sep",
        "rate_sep_closed",
        "qsl",
        "qsl_closed",
        "qsl_sep_plus",
        "qsl_sep_plus_closed",
    ];
    let meta = FigureMeta {
        figure: 1,
        title: "Exact and separable rates of change of the swap model versus the overlap |q| (in units of |kappa|)".into(),
        columns: header.iter().map(|s| s.to_string()).collect(),
        y_scale: "linear".into(),
        notes: vec![format!(
            "rate_full crosses qsl_sep_plus at |q| = 2^(-1/4) = {}",
            num(swap_crossover_overlap())
        )],
        max_rel_deviation: dev,
        solver: *cfg,
        converged: report.converged,
    };
    Ok(Figure { header, rows, meta })
}

fn ratio_figure(
    range: std::ops::RangeInclusive<usize>,
    cfg: &SolverConfig,
    section: impl Fn(usize) -> ModelSection + Sync,
    closed: impl Fn(usize) -> f64 + Sync,
) -> Result<(Vec<Vec<f64>>, f64, bool), CliError> {
    let results = range
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|x| -> Result<(Vec<f64>, f64, bool), CliError> {
            let model = resolve_model(&section(x))?;
            let h = model.hamiltonian(1.0)?;
            let r = qsl_sep_bound(&h, &model.space()?, cfg, 1.0)?;
            let ratio = r.ratio.value().unwrap_or(f64::INFINITY);
            let c = closed(x);
            Ok((vec![x as f64, ratio, c, r.qsl, r.qsl_sep_plus], rel_dev(ratio, c), r.converged))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let dev = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let converged = results.iter().all(|r| r.2);
    Ok((results.into_iter().map(|r| r.0).collect(), dev, converged))
}

fn model_section(name: &str, params: &[(&str, f64)]) -> ModelSection {
    ModelSection { name: Some(name.into()), params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
}

/// Speedup of the qudit model for `d = 2..10`.
pub fn figure2(cfg: &SolverConfig) -> Result<Figure, CliError> {
    let (rows, dev, converged) =
        ratio_figure(2..=10, cfg, |d| model_section("qudit", &[("d", d as f64)]), qudit_speedup)?;
    let header = vec!["d", "ratio", "ratio_closed", "qsl", "qsl_sep_plus"];
    let meta = FigureMeta {
        figure: 2,
        title: "Speedup of the two-qudit model versus the local dimension d".into(),
        columns: header.iter().map(|s| s.to_string()).collect(),
        y_scale: "linear".into(),
        notes: vec!["closed form d / sqrt(2)".into()],
        max_rel_deviation: dev,
        solver: *cfg,
        converged,
    };
    Ok(Figure { header, rows, meta })
}

/// Speedup of the N-mode model for `N = 2..10`.
pub fn figure3(cfg: &SolverConfig) -> Result<Figure, CliError> {
    let (rows, dev, converged) =
        ratio_figure(2..=10, cfg, |n| model_section("nmode", &[("n", n as f64)]), nmode_speedup)?;
    let header = vec!["n", "ratio", "ratio_closed", "qsl", "qsl_sep_plus"];
    let meta = FigureMeta {
        figure: 3,
        title: "Speedup of the N-mode model versus the number of parties N".into(),
        columns: header.iter().map(|s| s.to_string()).collect(),
        y_scale: "log".into(),
        notes: vec!["closed form 2^(N-1) / sqrt(N); plot the ratio on a logarithmic axis".into()],
        max_rel_deviation: dev,
        solver: *cfg,
        converged,
    };
    Ok(Figure { header, rows, meta })
}

pub fn cmd_figures(which: &[u8], out_dir: &Path, cfg: &SolverConfig) -> Result<bool, CliError> {
    let mut converged = true;
    for &f in which {
        let fig = match f {
            1 => figure1(cfg)?,
            2 => figure2(cfg)?,
            3 => figure3(cfg)?,
            other => return Err(CliError::Usage(format!("unknown figure {other}"))),
        };
        let rows: Vec<Vec<String>> = fig.rows.iter().map(|r| r.iter().map(|&x| num(x)).collect()).collect();
        emit(Some(&out_dir.join(format!("fig{f}.csv"))), &csv_bytes(&fig.header, &rows)?)?;
        emit(Some(&out_dir.join(format!("fig{f}_meta.json"))), &json_bytes(&fig.meta)?)?;
        converged &= fig.meta.converged;
    }
    Ok(converged)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub qsl: f64,
    pub qsl_sep_plus: f64,
    pub ratio: SpeedupRatio,
    pub ratio_closed: f64,
    pub converged: bool,
}

/// Default swept parameter of each model.
pub fn default_sweep_param(model: &str) -> &'static str {
    match model {
        "swap" => "q",
        "qudit" => "d",
        _ => "n",
    }
}

/// Evaluates the speed limits over `steps` evenly spaced values of one model
/// parameter; rows come back in parameter order.
pub fn run_sweep(
    section: &ModelSection,
    base: &Scenario,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<Vec<SweepRow>, CliError> {
    if steps == 0 || !from.is_finite() || !to.is_finite() {
        return Err(CliError::Usage("sweep needs finite bounds and at least one step".into()));
    }
    let values: Vec<f64> = if steps == 1 {
        vec![from]
    } else {
        (0..steps).map(|k| from + (to - from) * k as f64 / (steps - 1) as f64).collect()
    };
    // Validate every point before starting any computation.
    let models = values
        .iter()
        .map(|&v| {
            let mut s = section.clone();
            s.params.insert(param.to_string(), v);
            resolve_model(&s)
        })
        .collect::<Result<Vec<_>, _>>()?;
    models
        .into_par_iter()
        .zip(values)
        .map(|(model, value)| {
            let h = model.hamiltonian(base.hbar)?;
            let r = qsl_sep_bound(&h, &model.space()?, &base.solver, base.hbar)?;
            Ok(SweepRow {
                value,
                qsl: r.qsl,
                qsl_sep_plus: r.qsl_sep_plus,
                ratio: r.ratio,
                ratio_closed: closed_form(&model, base.hbar)?.ratio,
                converged: r.converged,
            })
        })
        .collect()
}

pub fn cmd_sweep(
    section: &ModelSection,
    scn: &Scenario,
    param: &str,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<bool, CliError> {
    let rows = run_sweep(section, scn, param, from, to, steps)?;
    let converged = rows.iter().all(|r| r.converged);
    match scn.format {
        Format::Json => write_json(scn.out.as_deref(), &rows)?,
        Format::Csv => {
            let text: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        num(r.value),
                        num(r.qsl),
                        num(r.qsl_sep_plus),
                        ratio_text(&r.ratio),
                        num(r.ratio_closed),
                        r.converged.to_string(),
                    ]
                })
                .collect();
            write_csv(scn.out.as_deref(), &[param, "qsl", "qsl_sep_plus", "ratio", "ratio_closed", "converged"], &text)?;
        }
    }
    Ok(converged)
}
