//! Time evolution and rates of change.
//!
//! Three flows are provided: the exact unitary evolution of a pure state, the
//! nonlinear product-state (mean-field) evolution in which every party feels
//! the Hamiltonian reduced against the current states of all other parties,
//! and Lindblad evolution of density operators. Alongside them live the
//! trace-norm rates of change, the two-time witness test that separable
//! dynamics can never violate, and the interaction-picture reduction.
//!
//! Initial states always refer to `t = 0`; grids must be ascending and start
//! at a non-negative time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    inner, kron_all, normalized, pauli_string, spectral_norm, trace_norm, unitary_exp, ComplexMatrix,
    HermitianOperator, C64, I, ZERO,
};
use crate::spaces::{
    energy_stats, local_operator, random_ket, ProductState, PureState, SeparableEnsemble, SpaceDescriptor,
    SparseOperator,
};
use crate::speedlimits::{check_hbar, qsl_exact, qsl_sep_bound, SolverConfig};

/// Largest admissible `dt * ||H|| / hbar` for the fixed-step integrators.
pub const STEP_RULE: f64 = 0.01;
/// Steps between positivity checks of a Lindblad trajectory.
pub const POSITIVITY_INTERVAL: usize = 100;
/// Most negative eigenvalue tolerated in a Lindblad trajectory.
pub const POSITIVITY_TOL: f64 = 1e-7;
/// Tolerance on the validity of an initial density operator.
const DENSITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    /// `||d rho / dt||_1` at every grid point.
    pub rates: Vec<f64>,
    /// Mean energy at every grid point.
    pub energies: Vec<f64>,
    /// Largest deviation of a local norm from one seen before renormalization
    /// (zero for flows that need none).
    pub norm_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    /// Extreme eigenvalue of the commutator generator.
    pub gamma: f64,
    /// `2 |gamma|`
    pub rate: f64,
}

impl RateRecord {
    fn from_gamma(gamma: f64) -> Self {
        Self { gamma, rate: 2.0 * gamma.abs() }
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() || !(times[0] >= 0.0) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::BadTimeGrid);
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadTimeGrid);
    }
    Ok(())
}

fn check_step(dt: f64, scale: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("step size must be positive, got {dt}")));
    }
    if dt * scale > STEP_RULE * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt, limit: STEP_RULE / scale });
    }
    Ok(())
}

/// Number of equal substeps of length at most `dt` covering `span`.
fn substeps(span: f64, dt: f64) -> usize {
    ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

// ---------------------------------------------------------------------------
// Rates

/// `2 sqrt(Var H) / hbar` for a pure state.
pub fn rate_full(h: &HermitianOperator, psi: &PureState, hbar: f64) -> Result<RateRecord> {
    check_hbar(hbar)?;
    let stats = energy_stats(h, psi)?;
    Ok(RateRecord::from_gamma(stats.variance.sqrt() / hbar))
}

/// Rate of the product-state flow: `gamma^2` is the sum of the local energy
/// variances under the partially reduced Hamiltonians.
pub fn rate_separable(h: &HermitianOperator, prod: &ProductState, hbar: f64) -> Result<RateRecord> {
    check_hbar(hbar)?;
    prod.space().check_operator(h)?;
    let sparse = SparseOperator::from_hermitian(h);
    let (gamma, _) = product_rate_energy(&sparse, prod.space(), prod.locals(), hbar);
    Ok(RateRecord::from_gamma(gamma))
}

/// `(gamma, energy)` from the local forces `H_j |a_j>`.
fn product_rate_energy(sparse: &SparseOperator, space: &SpaceDescriptor, locals: &[Vec<C64>], hbar: f64) -> (f64, f64) {
    let forces = sparse.forces_raw(space, locals);
    let mut var = 0.0;
    let mut energy = 0.0;
    for (j, (a, f)) in locals.iter().zip(&forces).enumerate() {
        let e = inner(a, f).re;
        if j == 0 {
            energy = e;
        }
        var += (inner(f, f).re - e * e).max(0.0);
    }
    (var.sqrt() / hbar, energy)
}

/// `sum_j 1 (x) H_j (x) 1`, the Hermitian generator of the product-state flow
/// at `prod`.
pub fn separable_generator(h: &HermitianOperator, prod: &ProductState) -> Result<HermitianOperator> {
    let space = prod.space();
    space.check_operator(h)?;
    let sparse = SparseOperator::from_hermitian(h);
    let mut g = HermitianOperator::zero(space.total_dim());
    for j in 0..space.parties() {
        let reduced = sparse.reduce(prod, j);
        g = &g + &local_operator(space, &reduced, j)?;
    }
    Ok(g)
}

/// `|| (1 / i hbar) [G, rho] ||_1`, computed by diagonalization.
pub fn commutator_trace_norm(generator: &HermitianOperator, rho: &ComplexMatrix, hbar: f64) -> Result<f64> {
    check_hbar(hbar)?;
    if rho.rows() != generator.dim() || rho.cols() != generator.dim() {
        return Err(Error::DimensionMismatch { expected: generator.dim(), found: rho.rows() });
    }
    let c = generator.matrix().commutator(rho).scale(-I / hbar);
    trace_norm(&hermitian_part(&c))
}

fn hermitian_part(m: &ComplexMatrix) -> HermitianOperator {
    let sym = (m + &m.adjoint()).scale(C64::from(0.5));
    HermitianOperator::new(sym).expect("Hermitian part is Hermitian")
}

// ---------------------------------------------------------------------------
// Closed evolutions

/// Exact evolution `exp(-i H t / hbar) |psi_0>` sampled on the grid.
pub fn evolve_full(h: &HermitianOperator, psi0: &PureState, times: &[f64], hbar: f64) -> Result<Trajectory<PureState>> {
    check_hbar(hbar)?;
    check_grid(times)?;
    psi0.space().check_operator(h)?;
    let eig = h.eig()?;
    let n = eig.values.len();
    let v = &eig.vectors;
    let coeffs: Vec<C64> = (0..n).map(|k| (0..n).map(|r| v[(r, k)].conj() * psi0.vector()[r]).sum()).collect();

    let mut traj = Trajectory { times: times.to_vec(), states: vec![], rates: vec![], energies: vec![], norm_drift: 0.0 };
    for &t in times {
        let phased: Vec<C64> = coeffs
            .iter()
            .zip(&eig.values)
            .map(|(c, &e)| c * C64::from_polar(1.0, -e * t / hbar))
            .collect();
        let vector = v.matvec(&phased);
        let state = PureState::normalized(psi0.space().clone(), vector)?;
        let stats = energy_stats(h, &state)?;
        traj.rates.push(2.0 * stats.variance.sqrt() / hbar);
        traj.energies.push(stats.mean);
        traj.states.push(state);
    }
    Ok(traj)
}

type Locals = Vec<Vec<C64>>;

fn axpy(base: &Locals, k: &Locals, h: f64) -> Locals {
    base.iter()
        .zip(k)
        .map(|(a, ka)| a.iter().zip(ka).map(|(x, y)| x + y * h).collect())
        .collect()
}

/// One classical RK4 step on the concatenated locals, followed by
/// renormalization of every local. Returns the largest pre-normalization
/// norm deviation.
fn rk4_product(locals: &mut Locals, t: f64, h: f64, rhs: &mut dyn FnMut(f64, &Locals) -> Locals) -> f64 {
    let k1 = rhs(t, locals);
    let k2 = rhs(t + h / 2.0, &axpy(locals, &k1, h / 2.0));
    let k3 = rhs(t + h / 2.0, &axpy(locals, &k2, h / 2.0));
    let k4 = rhs(t + h, &axpy(locals, &k3, h));
    let mut drift: f64 = 0.0;
    for (j, a) in locals.iter_mut().enumerate() {
        for (i, x) in a.iter_mut().enumerate() {
            *x += (k1[j][i] + (k2[j][i] + k3[j][i]) * 2.0 + k4[j][i]) * (h / 6.0);
        }
        let n = inner(a, a).re.sqrt();
        drift = drift.max((n - 1.0).abs());
        a.iter_mut().for_each(|x| *x /= n);
    }
    drift
}

/// Integrates from `t = 0` and returns the locals at every grid time.
fn drive_product(
    start: Locals,
    times: &[f64],
    dt: f64,
    rhs: &mut dyn FnMut(f64, &Locals) -> Locals,
) -> (Vec<Locals>, f64) {
    let mut locals = start;
    let mut t = 0.0;
    let mut drift: f64 = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = substeps(span, dt);
            let h = span / n as f64;
            for k in 0..n {
                drift = drift.max(rk4_product(&mut locals, t + k as f64 * h, h, rhs));
            }
        }
        t = target;
        out.push(locals.clone());
    }
    (out, drift)
}

fn sparse_rhs(sparse: &SparseOperator, space: &SpaceDescriptor, locals: &Locals, hbar: f64) -> Locals {
    let factor = -I / hbar;
    sparse
        .forces_raw(space, locals)
        .into_iter()
        .map(|f| f.into_iter().map(|x| x * factor).collect())
        .collect()
}

/// Product-state flow `i hbar d/dt |a_j> = H_j |a_j>` by RK4 with per-step
/// renormalization; requires `dt * ||H|| / hbar <= 0.01`.
pub fn evolve_separable(
    h: &HermitianOperator,
    prod0: &ProductState,
    times: &[f64],
    dt: f64,
    hbar: f64,
) -> Result<Trajectory<ProductState>> {
    check_hbar(hbar)?;
    check_grid(times)?;
    let space = prod0.space();
    space.check_operator(h)?;
    check_step(dt, spectral_norm(h)? / hbar)?;

    let sparse = SparseOperator::from_hermitian(h);
    let mut rhs = |_t: f64, locals: &Locals| sparse_rhs(&sparse, space, locals, hbar);
    let (samples, drift) = drive_product(prod0.locals().to_vec(), times, dt, &mut rhs);

    let mut traj = Trajectory { times: times.to_vec(), states: vec![], rates: vec![], energies: vec![], norm_drift: drift };
    for locals in samples {
        let (gamma, energy) = product_rate_energy(&sparse, space, &locals, hbar);
        traj.rates.push(2.0 * gamma);
        traj.energies.push(energy);
        traj.states.push(ProductState::new(space.clone(), locals)?);
    }
    Ok(traj)
}

/// Product-state flow generated by the time-dependent interaction-picture
/// Hamiltonian `H_eff(t)` built from `h_locals` and `h_int`. Rates and
/// energies refer to `H_eff(t)`.
pub fn evolve_separable_interaction(
    h_locals: &[HermitianOperator],
    h_int: &HermitianOperator,
    prod0: &ProductState,
    times: &[f64],
    dt: f64,
    hbar: f64,
) -> Result<Trajectory<ProductState>> {
    check_hbar(hbar)?;
    check_grid(times)?;
    let space = prod0.space();
    space.check_operator(h_int)?;
    check_locals(space, h_locals)?;
    // Local conjugation leaves the operator norm unchanged.
    check_step(dt, spectral_norm(h_int)? / hbar)?;

    let mut failure = None;
    let mut rhs = |t: f64, locals: &Locals| match interaction_picture(h_locals, h_int, t, hbar) {
        Ok(h_eff) => sparse_rhs(&SparseOperator::from_hermitian(&h_eff), space, locals, hbar),
        Err(e) => {
            failure.get_or_insert(e);
            locals.iter().map(|a| vec![ZERO; a.len()]).collect()
        }
    };
    let (samples, drift) = drive_product(prod0.locals().to_vec(), times, dt, &mut rhs);
    if let Some(e) = failure {
        return Err(e);
    }

    let mut traj = Trajectory { times: times.to_vec(), states: vec![], rates: vec![], energies: vec![], norm_drift: drift };
    for (locals, &t) in samples.into_iter().zip(times) {
        let sparse = SparseOperator::from_hermitian(&interaction_picture(h_locals, h_int, t, hbar)?);
        let (gamma, energy) = product_rate_energy(&sparse, space, &locals, hbar);
        traj.rates.push(2.0 * gamma);
        traj.energies.push(energy);
        traj.states.push(ProductState::new(space.clone(), locals)?);
    }
    Ok(traj)
}

/// Member trajectories of a separable mixture; the weights are carried over
/// unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleTrajectory {
    pub weights: Vec<f64>,
    pub members: Vec<Trajectory<ProductState>>,
}

impl EnsembleTrajectory {
    /// Mixture density operator at grid index `k`.
    pub fn density(&self, k: usize) -> Result<ComplexMatrix> {
        let states = self.members.iter().map(|m| m.states[k].clone()).collect();
        Ok(SeparableEnsemble::new(self.weights.clone(), states)?.density())
    }
}

pub fn evolve_ensemble(
    h: &HermitianOperator,
    ensemble: &SeparableEnsemble,
    times: &[f64],
    dt: f64,
    hbar: f64,
) -> Result<EnsembleTrajectory> {
    let members = ensemble
        .members()
        .par_iter()
        .map(|m| evolve_separable(h, m, times, dt, hbar))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleTrajectory { weights: ensemble.weights().to_vec(), members })
}

// ---------------------------------------------------------------------------
// Two-time witness

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessVerdict {
    pub violated: bool,
    /// `max over pairs of |<L>_f - <L>_i| - (t_f - t_i) QSL_sep^+ ||L||`.
    pub max_excess: f64,
    pub violating_interval: Option<(f64, f64)>,
}

fn check_series(series: &[(f64, f64)], qsl_sep_plus: f64, l_inf: f64) -> Result<()> {
    if series.len() < 2 {
        return Err(Error::MalformedSeries(format!("need at least two samples, got {}", series.len())));
    }
    if let Some(k) = series.iter().position(|(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(Error::MalformedSeries(format!("non-finite value at sample {k}")));
    }
    if let Some(k) = series.windows(2).position(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::MalformedSeries(format!("times not strictly increasing at sample {}", k + 1)));
    }
    if !(l_inf > 0.0 && l_inf.is_finite()) {
        return Err(Error::MalformedSeries(format!("observable norm must be positive, got {l_inf}")));
    }
    if !(qsl_sep_plus >= 0.0 && qsl_sep_plus.is_finite()) {
        return Err(Error::MalformedSeries(format!("separable bound must be finite and non-negative, got {qsl_sep_plus}")));
    }
    Ok(())
}

/// Checks every pair of samples against the separable cone
/// `|<L>_f - <L>_i| <= (t_f - t_i) QSL_sep^+ ||L||_inf`.
pub fn witness_check(series: &[(f64, f64)], qsl_sep_plus: f64, l_inf: f64) -> Result<WitnessVerdict> {
    check_series(series, qsl_sep_plus, l_inf)?;
    let slope = qsl_sep_plus * l_inf;
    let mut best = f64::NEG_INFINITY;
    let mut interval = (series[0].0, series[1].0);
    for (i, &(ti, li)) in series.iter().enumerate() {
        for &(tf, lf) in &series[i + 1..] {
            let excess = (lf - li).abs() - (tf - ti) * slope;
            if excess > best {
                best = excess;
                interval = (ti, tf);
            }
        }
    }
    let violated = best > 0.0;
    Ok(WitnessVerdict { violated, max_excess: best, violating_interval: violated.then_some(interval) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeEnvelope {
    pub times: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

/// `<L>_0 +- (t - t_0) QSL_sep^+ ||L||_inf` on the grid.
pub fn cone_bounds(l0: f64, qsl_sep_plus: f64, l_inf: f64, times: &[f64]) -> Result<ConeEnvelope> {
    let series: Vec<(f64, f64)> = times.iter().map(|&t| (t, l0)).collect();
    if times.len() == 1 {
        check_series(&[(times[0], l0), (times[0] + 1.0, l0)], qsl_sep_plus, l_inf)?;
    } else {
        check_series(&series, qsl_sep_plus, l_inf)?;
    }
    let t0 = times[0];
    let width: Vec<f64> = times.iter().map(|t| (t - t0) * qsl_sep_plus * l_inf).collect();
    Ok(ConeEnvelope {
        times: times.to_vec(),
        upper: width.iter().map(|w| l0 + w).collect(),
        lower: width.iter().map(|w| l0 - w).collect(),
    })
}

/// `<psi|L|psi>` for every state vector.
pub fn expectation_series(states: &[Vec<C64>], observable: &HermitianOperator) -> Result<Vec<f64>> {
    states
        .iter()
        .map(|v| {
            if v.len() != observable.dim() {
                return Err(Error::DimensionMismatch { expected: observable.dim(), found: v.len() });
            }
            Ok(observable.expectation(v))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliWitness {
    /// Pauli string such as `"zi"`.
    pub label: String,
    pub series: Vec<f64>,
    pub verdict: WitnessVerdict,
}

fn pauli_labels(qubits: usize) -> Vec<String> {
    let mut labels = vec![String::new()];
    for _ in 0..qubits {
        labels = labels.iter().flat_map(|l| "ixyz".chars().map(move |c| format!("{l}{c}"))).collect();
    }
    labels.retain(|l| l.chars().any(|c| c != 'i'));
    labels
}

/// Searches all non-trivial Pauli strings for the observable whose series
/// leaves the separable cone furthest. Interval endpoints are grid points.
pub fn search_pauli_witness(
    times: &[f64],
    states: &[Vec<C64>],
    qubits: usize,
    qsl_sep_plus: f64,
) -> Result<PauliWitness> {
    if qubits == 0 || states.len() != times.len() {
        return Err(Error::InvalidParameter("one state per time and at least one qubit required".into()));
    }
    let candidates = pauli_labels(qubits)
        .into_par_iter()
        .map(|label| {
            let obs = pauli_string(&label)?;
            let series = expectation_series(states, &obs)?;
            let pairs: Vec<(f64, f64)> = times.iter().copied().zip(series.iter().copied()).collect();
            let verdict = witness_check(&pairs, qsl_sep_plus, 1.0)?;
            Ok(PauliWitness { label, series, verdict })
        })
        .collect::<Result<Vec<_>>>()?;
    // Deterministic choice: largest excess, first label on ties.
    let mut best: Option<PauliWitness> = None;
    for c in candidates {
        if best.as_ref().is_none_or(|b| c.verdict.max_excess > b.verdict.max_excess) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one Pauli string"))
}

// ---------------------------------------------------------------------------
// Interaction picture

fn check_locals(space: &SpaceDescriptor, h_locals: &[HermitianOperator]) -> Result<()> {
    if h_locals.len() != space.parties() {
        return Err(Error::DimensionMismatch { expected: space.parties(), found: h_locals.len() });
    }
    for (h, &d) in h_locals.iter().zip(space.dims()) {
        if h.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: h.dim() });
        }
    }
    Ok(())
}

/// `H_eff(t) = U(t)^+ H_int U(t)` with `U(t) = (x)_j exp(-i H_j t / hbar)`.
pub fn interaction_picture(
    h_locals: &[HermitianOperator],
    h_int: &HermitianOperator,
    t: f64,
    hbar: f64,
) -> Result<HermitianOperator> {
    check_hbar(hbar)?;
    let space = SpaceDescriptor::new(h_locals.iter().map(|h| h.dim()).collect())?;
    space.check_operator(h_int)?;
    let factors = h_locals.iter().map(|h| unitary_exp(h, t, hbar)).collect::<Result<Vec<_>>>()?;
    let u = kron_all(&factors)?;
    let conj = &(&u.adjoint() * h_int.matrix()) * &u;
    Ok(hermitian_part(&conj))
}

/// Local unitaries `exp(-i H_j t / hbar)` applied party by party.
pub fn local_rotation(h_locals: &[HermitianOperator], t: f64, hbar: f64) -> Result<Vec<ComplexMatrix>> {
    h_locals.iter().map(|h| unitary_exp(h, t, hbar)).collect()
}

// ---------------------------------------------------------------------------
// Open systems

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindbladModel {
    space: SpaceDescriptor,
    h: HermitianOperator,
    /// Jump operators in units of `time^(-1/2)`.
    jumps: Vec<ComplexMatrix>,
}

impl LindbladModel {
    pub fn new(space: SpaceDescriptor, h: HermitianOperator, jumps: Vec<ComplexMatrix>) -> Result<Self> {
        space.check_operator(&h)?;
        for j in &jumps {
            if j.rows() != h.dim() || j.cols() != h.dim() {
                return Err(Error::DimensionMismatch { expected: h.dim(), found: j.rows().max(j.cols()) });
            }
        }
        Ok(Self { space, h, jumps })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.h
    }

    pub fn jumps(&self) -> &[ComplexMatrix] {
        &self.jumps
    }

    /// `||H|| / hbar + sum_k ||h_k||^2`, the rate scale used by the step rule.
    pub fn generator_scale(&self, hbar: f64) -> Result<f64> {
        let mut s = spectral_norm(&self.h)? / hbar;
        for j in &self.jumps {
            s += jump_norm_sqr(j)?;
        }
        Ok(s)
    }
}

/// `||h||_inf^2`, the largest eigenvalue of `h^+ h`.
fn jump_norm_sqr(j: &ComplexMatrix) -> Result<f64> {
    let hh = HermitianOperator::new(&j.adjoint() * j)?;
    Ok(hh.eig()?.max_value().max(0.0))
}

/// `sum_k h_k rho h_k^+ - {h_k^+ h_k, rho} / 2`
pub fn dissipator(model: &LindbladModel, rho: &ComplexMatrix) -> ComplexMatrix {
    let n = model.h.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for j in &model.jumps {
        let jd = j.adjoint();
        let jj = &jd * j;
        let gain = &(j * rho) * &jd;
        let anti = &(&jj * rho) + &(rho * &jj);
        out = &out + &(&gain - &anti.scale(C64::from(0.5)));
    }
    out
}

/// `(1 / i hbar) [H, rho] + D(rho)`
pub fn lindblad_rhs(model: &LindbladModel, rho: &ComplexMatrix, hbar: f64) -> ComplexMatrix {
    let unitary = model.h.matrix().commutator(rho).scale(-I / hbar);
    &unitary + &dissipator(model, rho)
}

fn check_density(rho: &ComplexMatrix, dim: usize) -> Result<()> {
    if rho.rows() != dim || rho.cols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: rho.rows() });
    }
    let op = HermitianOperator::new(rho.clone())?;
    let tr = rho.trace();
    if (tr - C64::from(1.0)).norm() > DENSITY_TOL {
        return Err(Error::InvalidParameter(format!("density operator trace {tr} != 1")));
    }
    let min = op.eig()?.min_value();
    if min < -DENSITY_TOL {
        return Err(Error::PositivityLost { min_eigenvalue: min });
    }
    Ok(())
}

/// RK4 integration of the Lindblad equation with Hermitization after every
/// step; positivity is verified every `POSITIVITY_INTERVAL` steps and at the
/// last one. Requires `dt * (||H||/hbar + sum ||h_k||^2) <= 0.01`.
pub fn evolve_lindblad(
    model: &LindbladModel,
    rho0: &ComplexMatrix,
    times: &[f64],
    dt: f64,
    hbar: f64,
) -> Result<Trajectory<ComplexMatrix>> {
    check_hbar(hbar)?;
    check_grid(times)?;
    check_density(rho0, model.h.dim())?;
    check_step(dt, model.generator_scale(hbar)?)?;

    let f = |rho: &ComplexMatrix| lindblad_rhs(model, rho, hbar);
    let mut rho = hermitian_part(rho0).into_matrix();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut traj = Trajectory { times: times.to_vec(), states: vec![], rates: vec![], energies: vec![], norm_drift: 0.0 };
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = substeps(span, dt);
            let h = span / n as f64;
            for _ in 0..n {
                let k1 = f(&rho);
                let k2 = f(&(&rho + &k1.scale(C64::from(h / 2.0))));
                let k3 = f(&(&rho + &k2.scale(C64::from(h / 2.0))));
                let k4 = f(&(&rho + &k3.scale(C64::from(h))));
                let incr = &(&k1 + &(&k2 + &k3).scale(C64::from(2.0))) + &k4;
                rho = hermitian_part(&(&rho + &incr.scale(C64::from(h / 6.0)))).into_matrix();
                steps += 1;
                if steps.is_multiple_of(POSITIVITY_INTERVAL) {
                    check_positive(&rho)?;
                }
            }
        }
        t = target;
        let rate = trace_norm(&hermitian_part(&f(&rho)))?;
        traj.norm_drift = traj.norm_drift.max((rho.trace().re - 1.0).abs());
        traj.rates.push(rate);
        traj.energies.push((&rho * model.h.matrix()).trace().re);
        traj.states.push(rho.clone());
    }
    check_positive(&rho)?;
    Ok(traj)
}

fn check_positive(rho: &ComplexMatrix) -> Result<()> {
    let min = hermitian_part(rho).eig()?.min_value();
    if min < -POSITIVITY_TOL {
        return Err(Error::PositivityLost { min_eigenvalue: min });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenSystemBounds {
    pub qsl: f64,
    pub qsl_sep_plus: f64,
    /// Best value of `||D(|psi><psi|)||_1` found by the search (a lower bound
    /// on the dissipative speed limit).
    pub qsl_d_estimate: f64,
    /// `2 sum_k ||h_k||^2`, an upper bound on the dissipative speed limit.
    pub qsl_d_upper: f64,
    /// `QSL(H) + qsl_d_estimate`
    pub total_closed: f64,
    /// `QSL_sep^+(H) + qsl_d_estimate`
    pub total_sep: f64,
    pub maximizer: Vec<C64>,
    pub converged: bool,
}

/// Iterations of the stochastic hill climb applied to each start.
const POLISH_ITERS: usize = 400;

fn dissipative_rate(model: &LindbladModel, psi: &[C64]) -> Result<f64> {
    let d = dissipator(model, &ComplexMatrix::outer(psi, psi));
    trace_norm(&hermitian_part(&d))
}

/// Seeded random multistart plus adaptive random-perturbation ascent on
/// `||D(|psi><psi|)||_1`; each start owns its own RNG stream so the result is
/// independent of thread scheduling.
fn dissipative_search(model: &LindbladModel, cfg: &SolverConfig) -> Result<(f64, Vec<C64>)> {
    let dim = model.h.dim();
    let mut seeds: Vec<Vec<C64>> = (0..dim)
        .map(|k| {
            let mut e = vec![ZERO; dim];
            e[k] = C64::from(1.0);
            e
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    seeds.extend((0..cfg.starts).map(|_| random_ket(dim, &mut rng)));

    let results = seeds
        .into_par_iter()
        .enumerate()
        .map(|(idx, start)| -> Result<(f64, Vec<C64>)> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(idx as u64 + 1);
            let mut best = dissipative_rate(model, &start)?;
            let mut psi = start;
            let mut sigma = 0.3;
            for _ in 0..POLISH_ITERS {
                if sigma < 1e-10 {
                    break;
                }
                let kick = random_ket(dim, &mut rng);
                let phase = C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
                let trial: Vec<C64> = psi.iter().zip(&kick).map(|(x, k)| x + k * phase * sigma).collect();
                let Some(trial) = normalized(&trial) else { continue };
                let value = dissipative_rate(model, &trial)?;
                if value > best {
                    best = value;
                    psi = trial;
                    sigma *= 1.5;
                } else {
                    sigma *= 0.85;
                }
            }
            Ok((best, psi))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut winner = (f64::NEG_INFINITY, vec![]);
    for r in results {
        if r.0 > winner.0 {
            winner = r;
        }
    }
    Ok(winner)
}

/// Closed and separable speed limits extended by the dissipative
/// contribution.
pub fn lindblad_speed_bounds(model: &LindbladModel, cfg: &SolverConfig, hbar: f64) -> Result<OpenSystemBounds> {
    cfg.validate()?;
    check_hbar(hbar)?;
    let exact = qsl_exact(&model.h, hbar)?;
    let (qsl_sep_plus, converged) = if model.space.parties() >= 2 {
        let r = qsl_sep_bound(&model.h, &model.space, cfg, hbar)?;
        (r.qsl_sep_plus, r.converged)
    } else {
        // A single party: every pure state is a product state.
        (exact.qsl, true)
    };
    let (qsl_d_estimate, maximizer) =
        if model.jumps.is_empty() { (0.0, exact.extremal_state.clone()) } else { dissipative_search(model, cfg)? };
    let qsl_d_upper = 2.0 * model.jumps.iter().map(jump_norm_sqr).sum::<Result<f64>>()?;
    Ok(OpenSystemBounds {
        qsl: exact.qsl,
        qsl_sep_plus,
        qsl_d_estimate,
        qsl_d_upper,
        total_closed: exact.qsl + qsl_d_estimate,
        total_sep: qsl_sep_plus + qsl_d_estimate,
        maximizer,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, kron_vec, sigma_z, ONE};
    use crate::models::{analytic_rates, build_swap, pair_flow_solution, PairFlow, SwapModelParams};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
    }

    fn swap(q: f64) -> (HermitianOperator, ProductState) {
        build_swap(&SwapModelParams::new(1.0, C64::from(q)).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn full_swap_at_quarter_period() {
        let (h, st) = build_swap(&SwapModelParams::new(1.0, ZERO).unwrap(), 1.0).unwrap();
        let traj = evolve_full(&h, &st.embed(), &[0.0, PI / 2.0], 1.0).unwrap();
        let swapped = kron_vec(st.local(1), st.local(0));
        assert!(inner(&swapped, traj.states[1].vector()).norm_sqr() > 1.0 - 1e-12);
        assert!(traj.states[0].fidelity(&st.embed()) > 1.0 - 1e-14);
    }

    #[test]
    fn full_rates_match_closed_form() {
        for q in [0.0, 0.3, 0.8, 1.0] {
            let (h, st) = swap(q);
            let r = rate_full(&h, &st.embed(), 1.0).unwrap();
            let (want, _) = analytic_rates(&SwapModelParams::new(1.0, C64::from(q)).unwrap());
            assert!((r.rate - want).abs() < 1e-9, "q={q}");
            assert_eq!(r.rate, 2.0 * r.gamma.abs());
        }
    }

    #[test]
    fn separable_rates_match_closed_form() {
        for q in [0.0, 0.3, FRAC_1_SQRT_2, 1.0] {
            let (h, st) = swap(q);
            let r = rate_separable(&h, &st, 1.0).unwrap();
            let (_, want) = analytic_rates(&SwapModelParams::new(1.0, C64::from(q)).unwrap());
            assert!((r.rate - want).abs() < 1e-9, "q={q}");
            let g = separable_generator(&h, &st).unwrap();
            let brute = commutator_trace_norm(&g, &st.embed().density(), 1.0).unwrap();
            assert!((brute - r.rate).abs() < 1e-9);
        }
    }

    #[test]
    fn separable_flow_matches_closed_form() {
        for q in [0.1, 0.5, 0.9] {
            let (h, st) = swap(q);
            let times = grid(4.0 * PI, 40);
            let traj = evolve_separable(&h, &st, &times, 0.005, 1.0).unwrap();
            for (t, s) in times.iter().zip(&traj.states) {
                let (a, b) = pair_flow_solution(PairFlow::Swap, st.local(0), st.local(1), *t).unwrap();
                let want = ProductState::new(st.space().clone(), vec![a, b]).unwrap();
                assert!(s.fidelity(&want) > 1.0 - 1e-8, "q={q} t={t}");
            }
            assert!(traj.norm_drift < 1e-10);
            let e0 = traj.energies[0];
            assert!(traj.energies.iter().all(|e| (e - e0).abs() < 1e-7 * e0.abs() + 1e-9));
        }
    }

    #[test]
    fn identical_locals_are_stationary() {
        let (h, st) = swap(1.0);
        let traj = evolve_separable(&h, &st, &grid(3.0, 6), 0.005, 1.0).unwrap();
        assert!(traj.states.iter().all(|s| s.fidelity(&st) > 1.0 - 1e-14));
        assert!(traj.rates.iter().all(|&r| r < 1e-7));
    }

    #[test]
    fn step_rule_enforced() {
        let (h, st) = swap(0.5);
        // ||H|| = 3/2 for kappa = 1.
        assert!(matches!(evolve_separable(&h, &st, &[1.0], 0.007, 1.0), Err(Error::StepTooLarge { .. })));
        assert!(evolve_separable(&h, &st, &[1.0], 0.006, 1.0).is_ok());
        assert!(matches!(evolve_separable(&h, &st, &[1.0, 0.5], 0.001, 1.0), Err(Error::BadTimeGrid)));
    }

    #[test]
    fn fourth_order_convergence() {
        let (h, st) = swap(0.5);
        let t = 5.0;
        let (a, b) = pair_flow_solution(PairFlow::Swap, st.local(0), st.local(1), t).unwrap();
        let defect = |dt: f64| {
            let s = &evolve_separable(&h, &st, &[t], dt, 1.0).unwrap().states[0];
            [(&a, s.local(0)), (&b, s.local(1))]
                .iter()
                .map(|(x, y)| {
                    let phase = inner(x, y) / inner(x, y).norm();
                    y.iter().zip(x.iter()).map(|(p, r)| (p - r * phase).norm_sqr()).sum::<f64>().sqrt()
                })
                .fold(0.0, f64::max)
        };
        let (d1, d2) = (defect(0.0066), defect(0.0033));
        assert!(d1 / d2 >= 8.0, "{d1} {d2}");
    }

    #[test]
    fn witness_constant_and_cone() {
        let series: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 0.3)).collect();
        let v = witness_check(&series, 1.0, 1.0).unwrap();
        assert!(!v.violated && v.max_excess < 0.0 && v.violating_interval.is_none());
        let env = cone_bounds(0.2, 1.5, 2.0, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!((env.upper[0], env.lower[0]), (0.2, 0.2));
        assert!((env.upper[2] - env.lower[2] - 2.0 * 2.0 * 1.5 * 2.0).abs() < 1e-14);
        assert!(witness_check(&[(0.0, 1.0)], 1.0, 1.0).is_err());
        assert!(witness_check(&[(0.0, 1.0), (0.0, 1.0)], 1.0, 1.0).is_err());
        assert!(witness_check(&[(0.0, 1.0), (1.0, 1.0)], 1.0, 0.0).is_err());
    }

    #[test]
    fn witness_flags_jump() {
        let v = witness_check(&[(0.0, 0.0), (1.0, 0.5), (1.1, 2.0)], 1.0, 1.0).unwrap();
        assert!(v.violated);
        assert_eq!(v.violating_interval, Some((1.0, 1.1)));
        assert!((v.max_excess - 1.4).abs() < 1e-12);
    }

    #[test]
    fn full_swap_violates_witness() {
        let (h, st) = swap(0.2);
        let times = grid(2.0, 200);
        let traj = evolve_full(&h, &st.embed(), &times, 1.0).unwrap();
        let states: Vec<Vec<C64>> = traj.states.iter().map(|s| s.vector().to_vec()).collect();
        let w = search_pauli_witness(&times, &states, 2, 2f64.sqrt()).unwrap();
        assert!(w.verdict.violated, "{w:?}");
    }

    #[test]
    fn interaction_picture_trivial_cases() {
        let z = HermitianOperator::new(sigma_z()).unwrap();
        let zero = HermitianOperator::zero(2);
        let (h, _) = swap(0.3);
        let h_int = &h - &HermitianOperator::zero(4);
        let eff = interaction_picture(&[zero.clone(), zero.clone()], &h_int, 0.7, 1.0).unwrap();
        assert!(eff.matrix().max_abs_diff(h_int.matrix()) < 1e-14);
        let eff = interaction_picture(&[z.clone(), z], &HermitianOperator::zero(4), 0.7, 1.0).unwrap();
        assert!(eff.matrix().max_abs() == 0.0);
    }

    #[test]
    fn ensemble_keeps_weights() {
        let (h, a) = swap(0.3);
        let (_, b) = swap(0.8);
        let ens = SeparableEnsemble::new(vec![0.25, 0.75], vec![a.clone(), b]).unwrap();
        let traj = evolve_ensemble(&h, &ens, &grid(1.0, 4), 0.005, 1.0).unwrap();
        assert_eq!(traj.weights, ens.weights());
        let single = evolve_separable(&h, &a, &grid(1.0, 4), 0.005, 1.0).unwrap();
        assert_eq!(traj.members[0], single);
        let rho = traj.density(4).unwrap();
        assert!((rho.trace() - ONE).norm() < 1e-12);
    }

    fn decay_model(gamma: f64) -> LindbladModel {
        let mut j = ComplexMatrix::zeros(2, 2);
        j[(0, 1)] = C64::from(gamma.sqrt());
        LindbladModel::new(SpaceDescriptor::uniform(1, 2).unwrap(), HermitianOperator::zero(2), vec![j]).unwrap()
    }

    #[test]
    fn amplitude_damping_decays_exponentially() {
        let model = decay_model(0.7);
        let mut rho0 = ComplexMatrix::zeros(2, 2);
        rho0[(1, 1)] = ONE;
        let times = grid(3.0, 6);
        let traj = evolve_lindblad(&model, &rho0, &times, 0.01, 1.0).unwrap();
        for (t, rho) in times.iter().zip(&traj.states) {
            assert!((rho[(1, 1)].re - (-0.7 * t).exp()).abs() < 1e-9);
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dissipative_bounds_single_qubit() {
        let model = decay_model(0.7);
        let b = lindblad_speed_bounds(&model, &SolverConfig { starts: 4, ..Default::default() }, 1.0).unwrap();
        assert!(b.qsl_d_estimate >= 2.0 * 0.7 - 1e-12);
        assert!(b.qsl_d_estimate <= b.qsl_d_upper + 1e-12);
        assert!((b.qsl_d_upper - 1.4).abs() < 1e-12);
    }

    #[test]
    fn closed_limit_matches_unitary() {
        let (h, st) = swap(0.4);
        let model = LindbladModel::new(st.space().clone(), h.clone(), vec![]).unwrap();
        let times = grid(2.0, 4);
        let open = evolve_lindblad(&model, &st.embed().density(), &times, 0.005, 1.0).unwrap();
        let closed = evolve_full(&h, &st.embed(), &times, 1.0).unwrap();
        for (rho, psi) in open.states.iter().zip(&closed.states) {
            assert!(rho.max_abs_diff(&psi.density()) < 1e-9);
        }
        let b = lindblad_speed_bounds(&model, &SolverConfig::default(), 1.0).unwrap();
        assert_eq!(b.qsl_d_estimate, 0.0);
    }

    #[test]
    fn maximally_mixed_is_stationary_under_unital_noise() {
        let z = kron(&sigma_z(), &ComplexMatrix::identity(2)).unwrap().scale(C64::from(0.5));
        let model = LindbladModel::new(SpaceDescriptor::uniform(2, 2).unwrap(), HermitianOperator::zero(4), vec![z]).unwrap();
        let rho0 = ComplexMatrix::identity(4).scale(C64::from(0.25));
        let traj = evolve_lindblad(&model, &rho0, &[1.0], 0.01, 1.0).unwrap();
        assert!(traj.states[0].max_abs_diff(&rho0) < 1e-15);
    }
}
