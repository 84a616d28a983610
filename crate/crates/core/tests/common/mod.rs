#![allow(dead_code)]

use num_complex::Complex64 as C64;
use qsl_core::spaces::random_ket;
use qsl_core::{ComplexMatrix, HermitianOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// GUE-like random Hermitian matrix scaled by `scale`.
pub fn random_hermitian(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> HermitianOperator {
    let mut m = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in r..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if r == c { 0.0 } else { rng.sample(StandardNormal) };
            m[(r, c)] = C64::new(re, im) * scale;
            m[(c, r)] = C64::new(re, -im) * scale;
        }
    }
    HermitianOperator::new(m).unwrap()
}

/// Haar-ish random unitary from the eigenvectors of a random Hermitian matrix.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    random_hermitian(n, 1.0, rng).eig().unwrap().vectors
}

pub fn ket(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    random_ket(n, rng)
}

pub fn flat(m: &ComplexMatrix) -> Vec<C64> {
    m.as_slice().to_vec()
}
