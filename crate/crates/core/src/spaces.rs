//! Multipartite tensor-product bookkeeping: space descriptors, product and
//! pure states, and the partially reduced Hamiltonians obtained by
//! contracting an operator with every party but one.
//!
//! Parties are numbered from 0. Full-space basis indices are row-major in the
//! party order, i.e. party 0 is the most significant digit.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, kron_vec, norm, ComplexMatrix, HermitianOperator, C64, DIM_CAP, ONE, ZERO};

/// Normalization tolerance for local and global kets.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    dims: Vec<usize>,
}

impl SpaceDescriptor {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidParameter("a space needs at least one party".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidParameter(format!("local dimension {d} < 2")));
        }
        let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
        if total > DIM_CAP {
            return Err(Error::DimensionCap { dim: total, cap: DIM_CAP });
        }
        Ok(Self { dims })
    }

    /// `n` parties of local dimension `d`.
    pub fn uniform(n: usize, d: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Multi-index digits of a full-space basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for j in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * self.dims[j + 1];
        }
        strides
    }

    fn check_party(&self, j: usize) -> Result<()> {
        if j >= self.parties() {
            return Err(Error::PartyIndex { index: j, parties: self.parties() });
        }
        Ok(())
    }

    pub fn check_operator(&self, h: &HermitianOperator) -> Result<()> {
        if h.dim() != self.total_dim() {
            return Err(Error::DimensionMismatch { expected: self.total_dim(), found: h.dim() });
        }
        Ok(())
    }
}

/// A pure product state `|a_1> (x) ... (x) |a_N>` with unit-norm locals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    space: SpaceDescriptor,
    locals: Vec<Vec<C64>>,
}

impl ProductState {
    pub fn new(space: SpaceDescriptor, locals: Vec<Vec<C64>>) -> Result<Self> {
        if locals.len() != space.parties() {
            return Err(Error::DimensionMismatch { expected: space.parties(), found: locals.len() });
        }
        for (j, (a, &d)) in locals.iter().zip(space.dims()).enumerate() {
            if a.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: a.len() });
            }
            let deviation = (inner(a, a).re - 1.0).abs();
            if !(deviation <= NORM_TOL) {
                return Err(Error::NotNormalized { party: j, deviation });
            }
        }
        Ok(Self { space, locals })
    }

    /// Normalizes each local before validating. Fails on zero vectors.
    pub fn normalized(space: SpaceDescriptor, locals: Vec<Vec<C64>>) -> Result<Self> {
        let locals = locals
            .into_iter()
            .enumerate()
            .map(|(j, a)| {
                crate::linalg::normalized(&a).ok_or(Error::NotNormalized { party: j, deviation: 1.0 })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, locals)
    }

    /// Haar-random locals.
    pub fn random<R: Rng + ?Sized>(space: SpaceDescriptor, rng: &mut R) -> Self {
        let locals = space.dims().iter().map(|&d| random_ket(d, rng)).collect();
        Self { space, locals }
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn locals(&self) -> &[Vec<C64>] {
        &self.locals
    }

    pub fn local(&self, j: usize) -> &[C64] {
        &self.locals[j]
    }

    pub fn into_locals(self) -> Vec<Vec<C64>> {
        self.locals
    }

    /// Full-space Kronecker product vector.
    pub fn embed(&self) -> PureState {
        let vector = self.locals.iter().fold(vec![ONE], |acc, a| kron_vec(&acc, a));
        PureState { space: self.space.clone(), vector }
    }

    /// `prod_j |<a_j|b_j>|^2`, insensitive to local phases.
    pub fn fidelity(&self, other: &ProductState) -> f64 {
        self.locals.iter().zip(&other.locals).map(|(a, b)| inner(a, b).norm_sqr()).product()
    }

    /// `<a_1..a_N| H |a_1..a_N>`
    pub fn energy(&self, h: &HermitianOperator) -> Result<f64> {
        self.space.check_operator(h)?;
        Ok(h.expectation(&self.embed().vector))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    space: SpaceDescriptor,
    vector: Vec<C64>,
}

impl PureState {
    pub fn new(space: SpaceDescriptor, vector: Vec<C64>) -> Result<Self> {
        if vector.len() != space.total_dim() {
            return Err(Error::DimensionMismatch { expected: space.total_dim(), found: vector.len() });
        }
        let deviation = (norm(&vector).powi(2) - 1.0).abs();
        if !(deviation <= NORM_TOL) {
            return Err(Error::StateNotNormalized { deviation });
        }
        Ok(Self { space, vector })
    }

    pub fn normalized(space: SpaceDescriptor, vector: Vec<C64>) -> Result<Self> {
        let vector = crate::linalg::normalized(&vector).ok_or(Error::StateNotNormalized { deviation: 1.0 })?;
        Self::new(space, vector)
    }

    pub fn random<R: Rng + ?Sized>(space: SpaceDescriptor, rng: &mut R) -> Self {
        let vector = random_ket(space.total_dim(), rng);
        Self { space, vector }
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn vector(&self) -> &[C64] {
        &self.vector
    }

    pub fn into_vector(self) -> Vec<C64> {
        self.vector
    }

    /// `|<self|other>|^2`
    pub fn fidelity(&self, other: &PureState) -> f64 {
        inner(&self.vector, &other.vector).norm_sqr()
    }

    pub fn density(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.vector, &self.vector)
    }
}

/// Convex mixture of product states. The weights never change under closed
/// separable evolution, so they are fixed at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableEnsemble {
    weights: Vec<f64>,
    members: Vec<ProductState>,
}

impl SeparableEnsemble {
    pub fn new(weights: Vec<f64>, members: Vec<ProductState>) -> Result<Self> {
        if weights.len() != members.len() || weights.is_empty() {
            return Err(Error::InvalidParameter("ensemble needs one weight per member".into()));
        }
        if weights.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidParameter("ensemble weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("ensemble weights sum to {total}")));
        }
        if let Some(first) = members.first() {
            if members.iter().any(|m| m.space() != first.space()) {
                return Err(Error::InvalidParameter("ensemble members live in different spaces".into()));
            }
        }
        Ok(Self { weights, members })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn members(&self) -> &[ProductState] {
        &self.members
    }

    pub fn density(&self) -> ComplexMatrix {
        let dim = self.members[0].space().total_dim();
        self.weights.iter().zip(&self.members).fold(ComplexMatrix::zeros(dim, dim), |acc, (&p, m)| {
            &acc + &m.embed().density().scale(C64::new(p, 0.0))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyStats {
    pub mean: f64,
    pub variance: f64,
}

/// Mean energy and variance `<psi|H^2|psi> - <psi|H|psi>^2`.
pub fn energy_stats(h: &HermitianOperator, psi: &PureState) -> Result<EnergyStats> {
    psi.space.check_operator(h)?;
    let hv = h.apply(&psi.vector);
    let mean = inner(&psi.vector, &hv).re;
    let second = norm(&hv).powi(2);
    Ok(EnergyStats { mean, variance: (second - mean * mean).max(0.0) })
}

/// Partially reduced operator of party `j`: `H` contracted with the current
/// local states of all other parties.
pub fn partial_reduction(h: &HermitianOperator, state: &ProductState, j: usize) -> Result<HermitianOperator> {
    state.space.check_operator(h)?;
    state.space.check_party(j)?;
    Ok(SparseOperator::from_hermitian(h).reduce(state, j))
}

/// `H_j |a_j>` for every party, with `H_j` the partially reduced operator.
pub fn local_forces(h: &HermitianOperator, state: &ProductState) -> Result<Vec<Vec<C64>>> {
    state.space.check_operator(h)?;
    Ok(SparseOperator::from_hermitian(h).forces(state))
}

/// `1 (x) .. (x) op (x) .. (x) 1` acting on party `j`.
pub fn local_operator(space: &SpaceDescriptor, op: &HermitianOperator, j: usize) -> Result<HermitianOperator> {
    space.check_party(j)?;
    if op.dim() != space.dims()[j] {
        return Err(Error::DimensionMismatch { expected: space.dims()[j], found: op.dim() });
    }
    let factors: Vec<ComplexMatrix> = space
        .dims()
        .iter()
        .enumerate()
        .map(|(k, &d)| if k == j { op.matrix().clone() } else { ComplexMatrix::identity(d) })
        .collect();
    HermitianOperator::new(crate::linalg::kron_all(&factors)?)
}

/// Haar-random unit vector of dimension `d`.
pub fn random_ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..d)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Some(v) = crate::linalg::normalized(&v) {
            return v;
        }
    }
}

/// Nonzero entries of a Hermitian operator, used by the hot loops of the
/// separability solver and the separable integrator.
#[derive(Debug, Clone)]
pub(crate) struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    pub(crate) fn from_hermitian(h: &HermitianOperator) -> Self {
        let m = h.matrix();
        let dim = h.dim();
        let mut entries = Vec::new();
        for r in 0..dim {
            for (c, &z) in m.row(r).iter().enumerate() {
                if z != ZERO {
                    entries.push((r, c, z));
                }
            }
        }
        Self { dim, entries }
    }

    pub(crate) fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        for &(r, c, z) in &self.entries {
            out[r] += z * v[c];
        }
        out
    }

    /// Environment amplitudes `prod_{k != j} a_k[digit_k(i)]` and party-`j`
    /// digits for every full-space index `i`.
    fn environment(space: &SpaceDescriptor, locals: &[Vec<C64>], j: usize) -> (Vec<C64>, Vec<usize>) {
        let dim = space.total_dim();
        let strides = space.strides();
        let mut env = vec![ONE; dim];
        let mut digit = vec![0; dim];
        for (i, (e, dj)) in env.iter_mut().zip(digit.iter_mut()).enumerate() {
            for (k, (&stride, &d)) in strides.iter().zip(space.dims()).enumerate() {
                let x = (i / stride) % d;
                if k == j {
                    *dj = x;
                } else {
                    *e *= locals[k][x];
                }
            }
        }
        (env, digit)
    }

    pub(crate) fn reduce(&self, state: &ProductState, j: usize) -> HermitianOperator {
        self.reduce_raw(&state.space, &state.locals, j)
    }

    /// Reduction against arbitrary (not necessarily normalized) locals.
    pub(crate) fn reduce_raw(&self, space: &SpaceDescriptor, locals: &[Vec<C64>], j: usize) -> HermitianOperator {
        let d = space.dims()[j];
        let (env, digit) = Self::environment(space, locals, j);
        let mut out = ComplexMatrix::zeros(d, d);
        for &(r, c, z) in &self.entries {
            let w = env[r].conj() * z * env[c];
            if w != ZERO {
                out[(digit[r], digit[c])] += w;
            }
        }
        HermitianOperator::new(out).expect("contraction of a Hermitian operator is Hermitian")
    }

    pub(crate) fn forces(&self, state: &ProductState) -> Vec<Vec<C64>> {
        self.forces_raw(&state.space, &state.locals)
    }

    /// `H_j |a_j>` for every party against arbitrary locals.
    pub(crate) fn forces_raw(&self, space: &SpaceDescriptor, locals: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let full = locals.iter().fold(vec![ONE], |acc, a| kron_vec(&acc, a));
        let w = self.matvec(&full);
        (0..space.parties())
            .map(|j| {
                let (env, digit) = Self::environment(space, locals, j);
                let mut f = vec![ZERO; space.dims()[j]];
                for ((e, &x), wi) in env.iter().zip(&digit).zip(&w) {
                    f[x] += e.conj() * wi;
                }
                f
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, sigma_x, I};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> HermitianOperator {
        let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        HermitianOperator::new((&g + &g.adjoint()).scale(c(0.5))).unwrap()
    }

    fn swap_operator() -> HermitianOperator {
        HermitianOperator::new(ComplexMatrix::from_fn(4, 4, |r, col| {
            if r == (col % 2) * 2 + col / 2 { ONE } else { ZERO }
        }))
        .unwrap()
    }

    #[test]
    fn embed_basis_product() {
        let space = SpaceDescriptor::uniform(2, 2).unwrap();
        let p = ProductState::new(space, vec![vec![ONE, ZERO], vec![ZERO, ONE]]).unwrap();
        assert_eq!(p.embed().vector(), &[ZERO, ONE, ZERO, ZERO]);
    }

    #[test]
    fn embed_uniform_plus_states() {
        let space = SpaceDescriptor::uniform(3, 2).unwrap();
        let plus = vec![c(0.5f64.sqrt()); 2];
        let p = ProductState::new(space, vec![plus; 3]).unwrap();
        for z in p.embed().vector() {
            assert!((z - c(1.0 / 8f64.sqrt())).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_unnormalized_local() {
        let space = SpaceDescriptor::uniform(2, 2).unwrap();
        let err = ProductState::new(space, vec![vec![ONE, ZERO], vec![c(1.0 + 1e-9), ZERO]]).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { party: 1, .. }));
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(SpaceDescriptor::new(vec![]).is_err());
        assert!(SpaceDescriptor::new(vec![2, 1]).is_err());
        assert!(matches!(SpaceDescriptor::uniform(13, 2), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn swap_reduction_is_partner_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let space = SpaceDescriptor::uniform(2, 2).unwrap();
        let state = ProductState::random(space, &mut rng);
        let v = swap_operator();
        let red0 = partial_reduction(&v, &state, 0).unwrap();
        let expected = HermitianOperator::projector(state.local(1));
        assert!(red0.matrix().max_abs_diff(expected.matrix()) < 1e-14);
        let red1 = partial_reduction(&v, &state, 1).unwrap();
        let expected = HermitianOperator::projector(state.local(0));
        assert!(red1.matrix().max_abs_diff(expected.matrix()) < 1e-14);
    }

    #[test]
    fn maximally_entangled_reduction_is_conjugate_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 3;
        let phi: Vec<C64> = (0..d * d).map(|k| if k % (d + 1) == 0 { ONE } else { ZERO }).collect();
        let proj = HermitianOperator::projector(&phi);
        let space = SpaceDescriptor::uniform(2, d).unwrap();
        let state = ProductState::random(space, &mut rng);
        let red = partial_reduction(&proj, &state, 0).unwrap();
        let b_conj: Vec<C64> = state.local(1).iter().map(|z| z.conj()).collect();
        assert!(red.matrix().max_abs_diff(HermitianOperator::projector(&b_conj).matrix()) < 1e-14);
    }

    #[test]
    fn party_index_out_of_range() {
        let space = SpaceDescriptor::uniform(2, 2).unwrap();
        let state = ProductState::random(space, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(
            partial_reduction(&swap_operator(), &state, 2),
            Err(Error::PartyIndex { index: 2, parties: 2 })
        ));
    }

    #[test]
    fn eigenvector_has_zero_variance() {
        let h = HermitianOperator::new(kron(&sigma_x(), &sigma_x()).unwrap()).unwrap();
        let eig = h.eig().unwrap();
        let space = SpaceDescriptor::uniform(2, 2).unwrap();
        let psi = PureState::new(space, eig.vector(3)).unwrap();
        let stats = energy_stats(&h, &psi).unwrap();
        assert!((stats.mean - 1.0).abs() < 1e-14);
        assert!(stats.variance < 1e-14);
    }

    #[test]
    fn balanced_extreme_superposition_has_max_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_hermitian(6, &mut rng);
        let eig = h.eig().unwrap();
        let (lo, hi) = (eig.vector(0), eig.vector(5));
        let v: Vec<C64> = lo.iter().zip(&hi).map(|(a, b)| (a + b) * 0.5f64.sqrt()).collect();
        let space = SpaceDescriptor::new(vec![2, 3]).unwrap();
        let stats = energy_stats(&h, &PureState::new(space, v).unwrap()).unwrap();
        let half_gap = 0.5 * (eig.max_value() - eig.min_value());
        assert!((stats.variance - half_gap * half_gap).abs() < 1e-12);
    }

    #[test]
    fn energy_stats_match_direct_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let space = SpaceDescriptor::new(vec![3, 2]).unwrap();
        for _ in 0..20 {
            let h = random_hermitian(6, &mut rng);
            let psi = PureState::random(space.clone(), &mut rng);
            let stats = energy_stats(&h, &psi).unwrap();
            // Oracle: explicit density-matrix traces.
            let rho = psi.density();
            let mean = (&rho * h.matrix()).trace();
            let h2 = h.matrix() * h.matrix();
            let second = (&rho * &h2).trace();
            assert!((stats.mean - mean.re).abs() < 1e-9 && mean.im.abs() < 1e-12);
            assert!((stats.variance - (second.re - mean.re * mean.re)).abs() < 1e-9);
        }
    }

    #[test]
    fn forces_match_reductions() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let space = SpaceDescriptor::new(vec![2, 3, 2]).unwrap();
        let h = random_hermitian(12, &mut rng);
        let state = ProductState::random(space, &mut rng);
        let forces = local_forces(&h, &state).unwrap();
        for (j, f) in forces.iter().enumerate() {
            let red = partial_reduction(&h, &state, j).unwrap();
            let expected = red.apply(state.local(j));
            let diff: f64 = f.iter().zip(&expected).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn local_operator_places_factor() {
        let space = SpaceDescriptor::uniform(2, 2).unwrap();
        let y = HermitianOperator::new(ComplexMatrix::from_rows(&[[ZERO, -I], [I, ZERO]])).unwrap();
        let op = local_operator(&space, &y, 1).unwrap();
        let expected = kron(&ComplexMatrix::identity(2), y.matrix()).unwrap();
        assert_eq!(op.matrix(), &expected);
    }

    #[test]
    fn ensemble_validation() {
        let space = SpaceDescriptor::uniform(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = ProductState::random(space.clone(), &mut rng);
        let b = ProductState::random(space, &mut rng);
        assert!(SeparableEnsemble::new(vec![0.3, 0.7], vec![a.clone(), b.clone()]).is_ok());
        assert!(SeparableEnsemble::new(vec![0.3, 0.6], vec![a.clone(), b.clone()]).is_err());
        assert!(SeparableEnsemble::new(vec![-0.3, 1.3], vec![a, b]).is_err());
    }
}
