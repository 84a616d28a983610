//! The three benchmark Hamiltonians and their closed-form companions.
//!
//! * `swap`: two qubits under the Heisenberg exchange coupling
//!   `H = (hbar kappa / 2) (sx sx + sy sy + sz sz) = hbar kappa V - (hbar kappa / 2) 1`.
//! * `qudit`: two `d`-level systems whose ground state is maximally entangled,
//!   `H = -(E_perp - E_0) |psi_0><psi_0| + E_perp 1`.
//! * `nmode`: `N` truncated modes coupled by `Gamma (A^+)^K (x) A^(N-K) + h.c.`
//!   with `A = |0><1|`.
//!
//! The closed forms cover the exact and separable rates of the swap model, the
//! separable two-party flows generated by `V` and by `|Phi><Phi|`, and the
//! asymptotic speedup ratios. Every numerical path in the crate is checked
//! against them.
//!
//! Time scales: the two-party flows are written in a dimensionless time
//! `tau`. For the swap model `tau = kappa * t`; for the qudit model
//! `tau = g * t / hbar` with `g = -(E_perp - E_0) / d`. Both are signed, so a
//! negative coupling runs the flow backwards rather than being folded into
//! `|kappa|`.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, kron, ComplexMatrix, HermitianOperator, C64, I, ONE, ZERO};
use crate::spaces::{ProductState, SpaceDescriptor};
use crate::speedlimits::check_hbar;

/// Slack on `|q| <= 1`.
const OVERLAP_SLACK: f64 = 1e-12;
/// Below this `Delta * tau` the trigonometric ratios switch to their series.
const SINC_CUTOFF: f64 = 1e-8;

fn check_overlap(q: C64) -> Result<()> {
    if !(q.norm() <= 1.0 + OVERLAP_SLACK) {
        return Err(Error::InvalidParameter(format!("overlap |q| = {} exceeds 1", q.norm())));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapModelParams {
    /// Coupling in inverse time units.
    pub kappa: f64,
    /// Overlap `<a_0|b_0>` of the initial locals.
    pub q: C64,
}

impl SwapModelParams {
    pub fn new(kappa: f64, q: C64) -> Result<Self> {
        let p = Self { kappa, q };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa != 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be nonzero and finite, got {}", self.kappa)));
        }
        check_overlap(self.q)
    }

    /// Dimensionless time of the two-party flow.
    pub fn tau(&self, t: f64) -> f64 {
        self.kappa * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuditModelParams {
    pub d: usize,
    pub e0: f64,
    pub e_perp: f64,
}

impl QuditModelParams {
    pub fn new(d: usize, e0: f64, e_perp: f64) -> Result<Self> {
        let p = Self { d, e0, e_perp };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidParameter(format!("qudit dimension must be >= 2, got {}", self.d)));
        }
        if !(self.e_perp - self.e0 > 0.0 && self.e0.is_finite() && self.e_perp.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need finite e_perp > e0, got e0 = {}, e_perp = {}",
                self.e0, self.e_perp
            )));
        }
        Ok(())
    }

    /// Prefactor `g` of the unnormalized projector in `H = g |Phi><Phi| + E_perp 1`.
    pub fn coupling(&self) -> f64 {
        -(self.e_perp - self.e0) / self.d as f64
    }

    pub fn tau(&self, t: f64, hbar: f64) -> f64 {
        self.coupling() * t / hbar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NModeModelParams {
    pub n_parties: usize,
    pub k_split: usize,
    /// Coupling in energy units.
    pub gamma: C64,
}

impl NModeModelParams {
    pub fn new(n_parties: usize, k_split: usize, gamma: C64) -> Result<Self> {
        let p = Self { n_parties, k_split, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_parties < 2 {
            return Err(Error::InvalidParameter(format!("need at least two modes, got {}", self.n_parties)));
        }
        if self.k_split > self.n_parties {
            return Err(Error::InvalidParameter(format!(
                "split K = {} exceeds N = {}",
                self.k_split, self.n_parties
            )));
        }
        if !(self.gamma.norm() > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter("coupling Gamma must be nonzero and finite".into()));
        }
        Ok(())
    }

    fn space(&self) -> Result<SpaceDescriptor> {
        SpaceDescriptor::uniform(self.n_parties, 2)
    }

    /// Basis indices of `|1^K 0^(N-K)>` and `|0^K 1^(N-K)>`.
    fn coupled_indices(&self) -> (usize, usize) {
        let n = self.n_parties;
        let ones_low = (1usize << (n - self.k_split)) - 1;
        let all = (1usize << n) - 1;
        (all ^ ones_low, ones_low)
    }
}

/// Which generator drives a two-party flow: the swap `V` (`lambda = +1`) or
/// the unnormalized projector `|Phi><Phi|` onto `sum_n |n,n>` (`lambda = -1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairFlow {
    Swap,
    Projector,
}

impl PairFlow {
    pub fn lambda(self) -> f64 {
        match self {
            PairFlow::Swap => 1.0,
            PairFlow::Projector => -1.0,
        }
    }

    /// The partner ket that enters the reduced operator of a party:
    /// `b` itself for the swap, `b*` for the projector.
    fn partner(self, b: &[C64]) -> Vec<C64> {
        match self {
            PairFlow::Swap => b.to_vec(),
            PairFlow::Projector => b.iter().map(|z| z.conj()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixSolutionParams {
    pub lambda: f64,
    pub q: C64,
    pub tau: f64,
}

impl AppendixSolutionParams {
    pub fn new(lambda: f64, q: C64, tau: f64) -> Result<Self> {
        if lambda != 1.0 && lambda != -1.0 {
            return Err(Error::InvalidParameter(format!("lambda must be +1 or -1, got {lambda}")));
        }
        check_overlap(q)?;
        if !tau.is_finite() {
            return Err(Error::InvalidParameter("tau must be finite".into()));
        }
        Ok(Self { lambda, q, tau })
    }

    pub fn delta(&self) -> f64 {
        let half = (1.0 - self.lambda) / 2.0;
        (half * half + self.lambda * self.q.norm_sqr()).max(0.0).sqrt()
    }
}

/// Coefficients of `|a(tau)> = c |a_0> + s |b_0'>`, global phase dropped.
///
/// `c = cos(D tau) + i (1 - lambda) / (2 D) sin(D tau)` and
/// `s = -i q* sin(D tau) / D`; at `D -> 0` the ratios take their limits
/// (`sin(D tau)/D -> tau`), which for `lambda = 1, q = 0` freezes the state.
pub fn appendix_sc(params: &AppendixSolutionParams) -> (C64, C64) {
    let delta = params.delta();
    let tau = params.tau;
    let x = delta * tau;
    let sinc_tau = if x.abs() < SINC_CUTOFF { tau * (1.0 - x * x / 6.0) } else { x.sin() / delta };
    let c = C64::new(x.cos(), (1.0 - params.lambda) / 2.0 * sinc_tau);
    let s = -I * params.q.conj() * sinc_tau;
    (c, s)
}

fn check_pair(a0: &[C64], b0: &[C64]) -> Result<()> {
    if a0.len() != b0.len() {
        return Err(Error::DimensionMismatch { expected: a0.len(), found: b0.len() });
    }
    Ok(())
}

/// Closed-form solution of the separable two-party flow
/// `i d/dtau |a> = |b'><b'|a>`, `i d/dtau |b> = |a'><a'|b>`, where the primed
/// partner is the ket itself (swap) or its complex conjugate (projector).
/// Locals are returned up to a global phase each.
pub fn pair_flow_solution(flow: PairFlow, a0: &[C64], b0: &[C64], tau: f64) -> Result<(Vec<C64>, Vec<C64>)> {
    check_pair(a0, b0)?;
    let lambda = flow.lambda();
    let evolve = |own: &[C64], other: &[C64]| -> Result<Vec<C64>> {
        let partner = flow.partner(other);
        let q = inner(own, &partner);
        let (c, s) = appendix_sc(&AppendixSolutionParams::new(lambda, q, tau)?);
        Ok(own.iter().zip(&partner).map(|(x, y)| c * x + s * y).collect())
    };
    Ok((evolve(a0, b0)?, evolve(b0, a0)?))
}

/// The constant of motion of a two-party flow:
/// `|b><b| + |a><a|` for the swap, `|b*><b*| - |a><a|` for the projector.
pub fn pair_flow_invariant(flow: PairFlow, a: &[C64], b: &[C64]) -> Result<ComplexMatrix> {
    check_pair(a, b)?;
    let partner = flow.partner(b);
    let pa = ComplexMatrix::outer(a, a).scale(C64::from(flow.lambda()));
    Ok(&ComplexMatrix::outer(&partner, &partner) + &pa)
}

/// `exp(-i tau G) |a_0, b_0>` for `G = V` or `G = |Phi><Phi|`.
pub fn pair_flow_full(flow: PairFlow, a0: &[C64], b0: &[C64], tau: f64) -> Result<Vec<C64>> {
    check_pair(a0, b0)?;
    let d = a0.len();
    let ab = crate::linalg::kron_vec(a0, b0);
    Ok(match flow {
        PairFlow::Swap => {
            let ba = crate::linalg::kron_vec(b0, a0);
            let (cs, sn) = (C64::from(tau.cos()), -I * tau.sin());
            ab.iter().zip(&ba).map(|(x, y)| cs * x + sn * y).collect()
        }
        PairFlow::Projector => {
            let overlap: C64 = a0.iter().zip(b0).map(|(x, y)| x * y).sum();
            let factor = ((-I * tau * d as f64).exp() - ONE) * overlap / d as f64;
            let mut out = ab;
            for n in 0..d {
                out[n * d + n] += factor;
            }
            out
        }
    })
}

/// Swap Hamiltonian and the initial product state `|a_0> = |0>`,
/// `|b_0> = q|0> + sqrt(1 - |q|^2)|1>`.
pub fn build_swap(params: &SwapModelParams, hbar: f64) -> Result<(HermitianOperator, ProductState)> {
    params.validate()?;
    check_hbar(hbar)?;
    let h = HermitianOperator::new(swap_operator(2).scale(C64::from(hbar * params.kappa)))?;
    let h = &h - &HermitianOperator::identity(4).scale(hbar * params.kappa / 2.0);
    let q = if params.q.norm() > 1.0 { params.q / params.q.norm() } else { params.q };
    let b0 = vec![q, C64::from((1.0 - q.norm_sqr()).max(0.0).sqrt())];
    let state = ProductState::normalized(SpaceDescriptor::uniform(2, 2)?, vec![vec![ONE, ZERO], b0])?;
    Ok((h, state))
}

/// The swap `V |m, n> = |n, m>` on two `d`-level systems.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(d * d, d * d);
    for m in 0..d {
        for n in 0..d {
            v[(n * d + m, m * d + n)] = ONE;
        }
    }
    v
}

/// Unnormalized `sum_n |n, n>`.
pub fn maximally_entangled(d: usize) -> Vec<C64> {
    let mut phi = vec![ZERO; d * d];
    for n in 0..d {
        phi[n * d + n] = ONE;
    }
    phi
}

pub fn build_qudit(params: &QuditModelParams) -> Result<HermitianOperator> {
    params.validate()?;
    let d = params.d;
    SpaceDescriptor::uniform(2, d)?;
    let phi = maximally_entangled(d);
    let proj = HermitianOperator::projector(&phi).scale(params.coupling());
    Ok(&proj + &HermitianOperator::identity(d * d).scale(params.e_perp))
}

/// Closed-form separability extremes `(E_min_sep, E_max_sep)` of the qudit
/// model: `(E_perp - (E_perp - E_0)/d, E_perp)`.
pub fn qudit_separability_extremes(params: &QuditModelParams) -> Result<(f64, f64)> {
    params.validate()?;
    Ok((params.e_perp + params.coupling(), params.e_perp))
}

pub fn build_nmode(params: &NModeModelParams) -> Result<HermitianOperator> {
    params.validate()?;
    let dim = params.space()?.total_dim();
    let (up, down) = params.coupled_indices();
    let mut m = ComplexMatrix::zeros(dim, dim);
    m[(up, down)] = params.gamma;
    m[(down, up)] = params.gamma.conj();
    HermitianOperator::new(m)
}

/// `(|1^K 0^(N-K)> + sign (Gamma*/|Gamma|) |0^K 1^(N-K)>) / sqrt 2`, the
/// eigenvector of the `nmode` Hamiltonian with eigenvalue `sign * |Gamma|`.
/// For `K = 0` this is the GHZ-type state `|0..0> +- phase |1..1>`.
pub fn ghz_state(params: &NModeModelParams, sign: f64) -> Result<Vec<C64>> {
    params.validate()?;
    let dim = params.space()?.total_dim();
    let (up, down) = params.coupled_indices();
    let phase = params.gamma.conj() / params.gamma.norm();
    let mut v = vec![ZERO; dim];
    v[up] += C64::from(std::f64::consts::FRAC_1_SQRT_2);
    v[down] += phase * sign.signum() * std::f64::consts::FRAC_1_SQRT_2;
    Ok(v)
}

/// Closed-form separability extremes `-+|Gamma| / 2^(N-1)` of the `nmode` model.
pub fn nmode_separability_extremes(params: &NModeModelParams) -> Result<(f64, f64)> {
    params.validate()?;
    let e = params.gamma.norm() / 2f64.powi(params.n_parties as i32 - 1);
    Ok((-e, e))
}

/// Exact and separable rates `(2|k| sqrt(1-|q|^4), 2 sqrt2 |q||k| sqrt(1-|q|^2))`
/// of the swap model from its canonical initial state.
pub fn analytic_rates(params: &SwapModelParams) -> (f64, f64) {
    let k = params.kappa.abs();
    let q = params.q.norm().min(1.0);
    let full = 2.0 * k * (1.0 - q.powi(4)).max(0.0).sqrt();
    let sep = 2.0 * SQRT_2 * q * k * (1.0 - q * q).max(0.0).sqrt();
    (full, sep)
}

/// `(QSL, QSL_sep^+) = (2|kappa|, sqrt2 |kappa|)` for the swap model.
pub fn swap_limits(params: &SwapModelParams) -> (f64, f64) {
    (2.0 * params.kappa.abs(), SQRT_2 * params.kappa.abs())
}

/// Overlap below which the exact swap rate exceeds the separable bound.
pub fn swap_crossover_overlap() -> f64 {
    2f64.powf(-0.25)
}

/// `d / sqrt 2`
pub fn qudit_speedup(d: usize) -> f64 {
    d as f64 / SQRT_2
}

/// `2^(N-1) / sqrt N`
pub fn nmode_speedup(n: usize) -> f64 {
    2f64.powi(n as i32 - 1) / (n as f64).sqrt()
}

/// `sigma_x` on the first `k` of `n` qubits; conjugating the split-`k` model
/// with it yields the `k = 0` form.
pub fn local_flip(n: usize, k: usize) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::identity(1);
    for j in 0..n {
        let f = if j < k { crate::linalg::sigma_x() } else { ComplexMatrix::identity(2) };
        out = kron(&out, &f)?;
    }
    Ok(out)
}

/// Human-readable mapping between physical time and the flow time `tau`.
pub fn time_scale_note(model: &str) -> &'static str {
    match model {
        "swap" => "tau = kappa * t",
        "qudit" => "tau = -(e_perp - e0) * t / (hbar * d)",
        _ => "t (no rescaling)",
    }
}
