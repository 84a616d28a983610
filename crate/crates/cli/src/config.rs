//! Scenario configuration: a JSON document whose keys can be overridden by
//! command-line flags, resolved into validated model parameters before any
//! numerical work starts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qsl_core::models::{
    build_nmode, build_qudit, build_swap, NModeModelParams, QuditModelParams, SwapModelParams,
};
use qsl_core::speedlimits::SolverConfig;
use qsl_core::{HermitianOperator, ProductState, SpaceDescriptor};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub starts: Option<usize>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub timing: Option<bool>,
}

/// The on-disk scenario document. Every field is optional; flags fill in or
/// override whatever the file leaves out.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    pub hbar: Option<f64>,
    #[serde(default)]
    pub outputs: OutputSection,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// A validated model with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum ModelSpec {
    Swap(SwapModelParams),
    Qudit(QuditModelParams),
    Nmode(NModeModelParams),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Swap(_) => "swap",
            ModelSpec::Qudit(_) => "qudit",
            ModelSpec::Nmode(_) => "nmode",
        }
    }

    pub fn space(&self) -> Result<SpaceDescriptor, CliError> {
        Ok(match self {
            ModelSpec::Swap(_) => SpaceDescriptor::uniform(2, 2)?,
            ModelSpec::Qudit(p) => SpaceDescriptor::uniform(2, p.d)?,
            ModelSpec::Nmode(p) => SpaceDescriptor::uniform(p.n_parties, 2)?,
        })
    }

    pub fn hamiltonian(&self, hbar: f64) -> Result<HermitianOperator, CliError> {
        Ok(match self {
            ModelSpec::Swap(p) => build_swap(p, hbar)?.0,
            ModelSpec::Qudit(p) => build_qudit(p)?,
            ModelSpec::Nmode(p) => build_nmode(p)?,
        })
    }

    /// The product state a trajectory starts from: the prescribed-overlap pair
    /// for the swap model, a seeded random product state otherwise.
    pub fn initial_state(&self, hbar: f64, seed: u64) -> Result<ProductState, CliError> {
        match self {
            ModelSpec::Swap(p) => Ok(build_swap(p, hbar)?.1),
            _ => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                Ok(ProductState::random(self.space()?, &mut rng))
            }
        }
    }

    /// Default horizon: one period of the relevant two-level dynamics.
    pub fn default_t_max(&self, hbar: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            ModelSpec::Swap(p) => 2.0 * PI / p.kappa.abs(),
            ModelSpec::Qudit(p) => 4.0 * PI * hbar / p.coupling().abs(),
            ModelSpec::Nmode(p) => PI * hbar / p.gamma.norm(),
        }
    }
}

const SWAP_KEYS: &[&str] = &["kappa", "q", "q_phase"];
const QUDIT_KEYS: &[&str] = &["d", "e0", "eperp"];
const NMODE_KEYS: &[&str] = &["n", "k_split", "gamma_re", "gamma_im"];

fn integer(params: &BTreeMap<String, f64>, key: &str, default: usize) -> Result<usize, CliError> {
    match params.get(key) {
        None => Ok(default),
        Some(&v) if v >= 0.0 && v.fract() == 0.0 && v <= 1e6 => Ok(v as usize),
        Some(&v) => Err(CliError::Usage(format!("parameter {key} must be a non-negative integer, got {v}"))),
    }
}

/// Builds the validated model description from a name and parameter map.
pub fn resolve_model(section: &ModelSection) -> Result<ModelSpec, CliError> {
    let name = section.name.as_deref().ok_or_else(|| CliError::Usage("no model given (use --model)".into()))?;
    let allowed = match name {
        "swap" => SWAP_KEYS,
        "qudit" => QUDIT_KEYS,
        "nmode" => NMODE_KEYS,
        other => return Err(CliError::Usage(format!("unknown model {other:?}; expected swap, qudit or nmode"))),
    };
    if let Some(bad) = section.params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(CliError::Usage(format!("parameter {bad} does not apply to model {name}")));
    }
    if let Some((k, v)) = section.params.iter().find(|(_, v)| !v.is_finite()) {
        return Err(CliError::Usage(format!("parameter {k} is not finite: {v}")));
    }
    let get = |k: &str, default: f64| section.params.get(k).copied().unwrap_or(default);
    let spec = match name {
        "swap" => {
            let q = get("q", 0.5);
            if !(0.0..=1.0).contains(&q) {
                return Err(CliError::Usage(format!("overlap magnitude q must lie in [0, 1], got {q}")));
            }
            ModelSpec::Swap(SwapModelParams::new(get("kappa", 1.0), Complex64::from_polar(q, get("q_phase", 0.0)))?)
        }
        "qudit" => ModelSpec::Qudit(QuditModelParams::new(integer(&section.params, "d", 3)?, get("e0", 0.0), get("eperp", 1.0))?),
        _ => {
            let p = NModeModelParams::new(
                integer(&section.params, "n", 4)?,
                integer(&section.params, "k_split", 0)?,
                Complex64::new(get("gamma_re", 1.0), get("gamma_im", 0.0)),
            )?;
            SpaceDescriptor::uniform(p.n_parties, 2)?;
            ModelSpec::Nmode(p)
        }
    };
    Ok(spec)
}

/// Everything a command needs, after merging file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: ModelSpec,
    pub solver: SolverConfig,
    pub hbar: f64,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub samples: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub timing: bool,
}

impl Scenario {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self, CliError> {
        let model = resolve_model(&cfg.model)?;
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            starts: cfg.solver.starts.unwrap_or(defaults.starts),
            max_iters: cfg.solver.max_iters.unwrap_or(defaults.max_iters),
            tol: cfg.solver.tol.unwrap_or(defaults.tol),
            seed: cfg.solver.seed.unwrap_or(defaults.seed),
        };
        solver.validate()?;
        let hbar = cfg.hbar.unwrap_or(1.0);
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(CliError::Usage(format!("hbar must be positive, got {hbar}")));
        }
        let samples = cfg.integrator.samples.unwrap_or(101);
        if samples < 2 {
            return Err(CliError::Usage("samples must be at least 2".into()));
        }
        if let Some(dt) = cfg.integrator.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::Usage(format!("dt must be positive, got {dt}")));
            }
        }
        if let Some(t) = cfg.integrator.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Usage(format!("t_max must be positive, got {t}")));
            }
        }
        Ok(Self {
            model,
            solver,
            hbar,
            dt: cfg.integrator.dt,
            t_max: cfg.integrator.t_max,
            samples,
            out: cfg.outputs.out.clone(),
            format: cfg.outputs.format.unwrap_or_default(),
            timing: cfg.outputs.timing.unwrap_or(false),
        })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max.unwrap_or_else(|| self.model.default_t_max(self.hbar))
    }

    /// Uniform grid from 0 to `t_max` with `samples` points.
    pub fn grid(&self) -> Vec<f64> {
        let t_max = self.t_max();
        let n = self.samples - 1;
        (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
    }

    /// Requested step, or half the largest step the integrator accepts.
    pub fn step(&self, h: &HermitianOperator) -> Result<f64, CliError> {
        if let Some(dt) = self.dt {
            return Ok(dt);
        }
        let norm = qsl_core::linalg::spectral_norm(h)?;
        Ok(if norm == 0.0 { 0.01 } else { 0.5 * qsl_core::dynamics::STEP_RULE * self.hbar / norm })
    }
}
