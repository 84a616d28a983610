//! Exact and separable quantum speed limits.
//!
//! The exact limit is the spectral range of the Hamiltonian divided by hbar.
//! The separable limit needs the extreme expectation values of `H` over
//! product states, which are the extreme solutions of the coupled
//! separability eigenvalue equations `H_j |a_j> = E_sep |a_j>`. Those are
//! found by alternating optimization: each party in turn is replaced by the
//! extreme eigenvector of its partially reduced operator, which never
//! decreases (max mode) or increases (min mode) the product-state energy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{inner, norm, HermitianOperator, C64, ZERO};
use crate::spaces::{ProductState, SpaceDescriptor, SparseOperator};

/// Relative stationarity residual required before a run counts as converged.
pub const RESIDUAL_RTOL: f64 = 1e-8;

/// Rotation applied to a local state whose reduced operator is degenerate.
const DEGENERATE_KICK: f64 = 1e-3;
const DEGENERATE_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub starts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { starts: 32, max_iters: 10_000, tol: 1e-12, seed: 0 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::InvalidParameter("solver needs at least one start".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extreme {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityEigenpair {
    pub value: f64,
    pub state: ProductState,
    pub converged: bool,
    pub iterations: usize,
    /// `max_j |H_j a_j - value a_j|`
    pub residual: f64,
}

/// One alternating-optimization run together with the energy after every
/// sweep (entry 0 is the starting energy).
#[derive(Debug, Clone)]
pub struct AlternatingRun {
    pub pair: SeparabilityEigenpair,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QslExact {
    pub qsl: f64,
    pub e_min: f64,
    pub e_max: f64,
    /// Balanced superposition of the extreme eigenvectors.
    pub extremal_state: Vec<C64>,
}

/// `QSL / QSL_sep^+`, with a distinguished value when the separable bound
/// vanishes (Hamiltonians proportional to the identity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpeedupRatio {
    Finite(f64),
    Unbounded,
}

impl SpeedupRatio {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Finite(x) => Some(*x),
            Self::Unbounded => None,
        }
    }
}

impl Serialize for SpeedupRatio {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(x) => serializer.serialize_f64(*x),
            Self::Unbounded => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SpeedupRatio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(x) => Ok(Self::Finite(x)),
            Repr::Text(s) if s == "inf" => Ok(Self::Unbounded),
            Repr::Text(s) => Err(serde::de::Error::custom(format!("unexpected ratio {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedReport {
    pub parties: usize,
    pub hbar: f64,
    pub qsl: f64,
    pub qsl_sep_plus: f64,
    pub ratio: SpeedupRatio,
    pub e_max: f64,
    pub e_min: f64,
    pub e_max_sep: f64,
    pub e_min_sep: f64,
    pub extremal_state: Vec<C64>,
    pub max_pair: SeparabilityEigenpair,
    pub min_pair: SeparabilityEigenpair,
    /// False if either separability extreme failed to converge.
    pub converged: bool,
}

/// `(E_max - E_min) / hbar` and the state that saturates it.
pub fn qsl_exact(h: &HermitianOperator, hbar: f64) -> Result<QslExact> {
    check_hbar(hbar)?;
    let eig = h.eig()?;
    let n = eig.values.len();
    let (lo, hi) = (eig.vector(0), eig.vector(n - 1));
    let extremal_state = if n == 1 {
        lo
    } else {
        lo.iter().zip(&hi).map(|(a, b)| (a + b) * std::f64::consts::FRAC_1_SQRT_2).collect()
    };
    Ok(QslExact {
        qsl: (eig.max_value() - eig.min_value()) / hbar,
        e_min: eig.min_value(),
        e_max: eig.max_value(),
        extremal_state,
    })
}

/// Maximal and minimal separability eigenvalues by seeded multistart
/// alternating optimization.
pub fn separability_extremes(
    h: &HermitianOperator,
    space: &SpaceDescriptor,
    cfg: &SolverConfig,
) -> Result<(SeparabilityEigenpair, SeparabilityEigenpair)> {
    cfg.validate()?;
    space.check_operator(h)?;
    if space.parties() < 2 {
        return Err(Error::InvalidParameter("separability extremes need at least two parties".into()));
    }
    let scale = operator_scale(h)?;
    let sparse = SparseOperator::from_hermitian(h);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<ProductState> =
        (0..cfg.starts).map(|_| ProductState::random(space.clone(), &mut rng)).collect();

    let run_all = |mode: Extreme| -> Vec<SeparabilityEigenpair> {
        starts
            .par_iter()
            .map(|start| run_alternating(&sparse, start.clone(), mode, cfg, scale).pair)
            .collect()
    };
    let max_pair = best_of(run_all(Extreme::Max), Extreme::Max);
    let min_pair = best_of(run_all(Extreme::Min), Extreme::Min);
    Ok((max_pair, min_pair))
}

/// A single alternating run from a given start.
pub fn alternating_search(
    h: &HermitianOperator,
    start: ProductState,
    mode: Extreme,
    cfg: &SolverConfig,
) -> Result<AlternatingRun> {
    cfg.validate()?;
    start.space().check_operator(h)?;
    let scale = operator_scale(h)?;
    Ok(run_alternating(&SparseOperator::from_hermitian(h), start, mode, cfg, scale))
}

/// Exact limit, separable bound and their ratio, with certificates.
pub fn qsl_sep_bound(
    h: &HermitianOperator,
    space: &SpaceDescriptor,
    cfg: &SolverConfig,
    hbar: f64,
) -> Result<SpeedReport> {
    check_hbar(hbar)?;
    let exact = qsl_exact(h, hbar)?;
    let (max_pair, min_pair) = separability_extremes(h, space, cfg)?;
    let n = space.parties() as f64;
    let scale = exact.e_max.abs().max(exact.e_min.abs());
    let mut range = max_pair.value - min_pair.value;
    if range <= 1e-12 * (1.0 + scale) {
        range = 0.0;
    }
    let qsl_sep_plus = n.sqrt() * range / hbar;
    let ratio = if range == 0.0 { SpeedupRatio::Unbounded } else { SpeedupRatio::Finite(exact.qsl / qsl_sep_plus) };
    Ok(SpeedReport {
        parties: space.parties(),
        hbar,
        qsl: exact.qsl,
        qsl_sep_plus,
        ratio,
        e_max: exact.e_max,
        e_min: exact.e_min,
        e_max_sep: max_pair.value,
        e_min_sep: min_pair.value,
        extremal_state: exact.extremal_state,
        converged: max_pair.converged && min_pair.converged,
        max_pair,
        min_pair,
    })
}

pub(crate) fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
    }
    Ok(())
}

/// Spectral norm, floored so that relative tolerances stay meaningful for
/// the zero operator.
fn operator_scale(h: &HermitianOperator) -> Result<f64> {
    let eig = h.eig()?;
    Ok(eig.max_value().abs().max(eig.min_value().abs()).max(f64::MIN_POSITIVE))
}

fn best_of(pairs: Vec<SeparabilityEigenpair>, mode: Extreme) -> SeparabilityEigenpair {
    let any_converged = pairs.iter().any(|p| p.converged);
    let better = |a: f64, b: f64| match mode {
        Extreme::Max => a > b,
        Extreme::Min => a < b,
    };
    let mut best: Option<SeparabilityEigenpair> = None;
    for p in pairs.into_iter().filter(|p| p.converged || !any_converged) {
        match &best {
            Some(b) if !better(p.value, b.value) => {}
            _ => best = Some(p),
        }
    }
    best.expect("at least one start")
}

fn run_alternating(
    h: &SparseOperator,
    start: ProductState,
    mode: Extreme,
    cfg: &SolverConfig,
    scale: f64,
) -> AlternatingRun {
    let space = start.space().clone();
    let parties = space.parties();
    let mut locals = start.into_locals();
    let mut kicks_left = parties;

    let (mut energy, _) = energy_and_residual(h, &space, &locals);
    let mut history = vec![energy];
    let mut converged = false;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;

    while iterations < cfg.max_iters {
        iterations += 1;
        for j in 0..parties {
            let state = ProductState::new(space.clone(), locals.clone()).expect("locals stay normalized");
            let reduced = h.reduce(&state, j);
            let Ok(eig) = reduced.eig() else { continue };
            if eig.max_value() - eig.min_value() <= DEGENERATE_RTOL * scale {
                if kicks_left > 0 {
                    kicks_left -= 1;
                    locals[j] = kick(&locals[j]);
                }
                continue;
            }
            locals[j] = match mode {
                Extreme::Max => eig.vector(eig.values.len() - 1),
                Extreme::Min => eig.vector(0),
            };
        }
        let (next, res) = energy_and_residual(h, &space, &locals);
        history.push(next);
        residual = res;
        let settled = (next - energy).abs() < cfg.tol;
        energy = next;
        if settled && residual <= RESIDUAL_RTOL * scale {
            converged = true;
            break;
        }
    }

    let state = ProductState::new(space, locals).expect("locals stay normalized");
    AlternatingRun {
        pair: SeparabilityEigenpair { value: energy, state, converged, iterations, residual },
        history,
    }
}

fn energy_and_residual(h: &SparseOperator, space: &SpaceDescriptor, locals: &[Vec<C64>]) -> (f64, f64) {
    let state = ProductState::new(space.clone(), locals.to_vec()).expect("locals stay normalized");
    let forces = h.forces(&state);
    let energy = inner(&locals[0], &forces[0]).re;
    let residual = forces
        .iter()
        .zip(locals)
        .map(|(f, a)| {
            let r: Vec<C64> = f.iter().zip(a).map(|(fi, ai)| fi - ai * energy).collect();
            norm(&r)
        })
        .fold(0.0, f64::max);
    (energy, residual)
}

/// Rotates `a` by a fixed small angle towards the computational basis vector
/// it overlaps least with (first such index on ties).
fn kick(a: &[C64]) -> Vec<C64> {
    let axis_index = a
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, z)| if z.norm() < bv { (i, z.norm()) } else { (bi, bv) })
        .0;
    let mut axis = vec![ZERO; a.len()];
    axis[axis_index] = C64::new(1.0, 0.0);
    let overlap = inner(a, &axis);
    let perp: Vec<C64> = axis.iter().zip(a).map(|(e, ai)| e - ai * overlap).collect();
    let perp_norm = norm(&perp);
    let (c, s) = (DEGENERATE_KICK.cos(), DEGENERATE_KICK.sin());
    let rotated: Vec<C64> = a.iter().zip(&perp).map(|(ai, p)| ai * c + p * (s / perp_norm)).collect();
    crate::linalg::normalized(&rotated).expect("rotation of a unit vector")
}
