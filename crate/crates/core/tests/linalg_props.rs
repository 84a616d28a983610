mod common;

use common::{flat, random_hermitian, random_unitary, rng};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qsl_core::linalg::{hermitian_eig, schatten_norm, spectral_norm, trace_norm, unitary_exp};
use qsl_core::HermitianOperator;
use qsl_oracles::{expm_taylor, power_spectral_norm};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..=8, scale in 1e-3f64..1e3) {
        let h = random_hermitian(n, scale, &mut rng(seed));
        let eig = hermitian_eig(&h).unwrap();
        let tol = 1e-12 * h.matrix().frobenius_norm().max(1.0);
        prop_assert!(eig.reconstruct().max_abs_diff(h.matrix()) <= tol);
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let vtv = &eig.vectors.adjoint() * &eig.vectors;
        prop_assert!(vtv.max_abs_diff(&qsl_core::ComplexMatrix::identity(n)) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn trace_norm_is_unitarily_invariant(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let h = random_hermitian(n, 1.0, &mut r);
        let u = random_unitary(n, &mut r);
        let rotated = HermitianOperator::new(&(&u * h.matrix()) * &u.adjoint()).unwrap();
        let (a, b) = (trace_norm(&h).unwrap(), trace_norm(&rotated).unwrap());
        prop_assert!((a - b).abs() < 1e-10 * a.max(1.0));
        prop_assert!((schatten_norm(&h, 1.0).unwrap() - a).abs() < 1e-12 * a.max(1.0));
    }

    #[test]
    fn spectral_norm_matches_power_iteration(seed in any::<u64>(), n in 1usize..=6) {
        let h = random_hermitian(n, 1.0, &mut rng(seed));
        let oracle = power_spectral_norm(&flat(h.matrix()), n);
        prop_assert!((spectral_norm(&h).unwrap() - oracle).abs() < 1e-8 * oracle.max(1.0));
    }

    #[test]
    fn propagator_group_property(seed in any::<u64>(), n in 1usize..=6, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
        let h = random_hermitian(n, 1.0, &mut rng(seed));
        let combined = unitary_exp(&h, t1 + t2, 1.0).unwrap();
        let product = &unitary_exp(&h, t1, 1.0).unwrap() * &unitary_exp(&h, t2, 1.0).unwrap();
        prop_assert!(combined.max_abs_diff(&product) < 1e-11);
    }

    #[test]
    fn propagator_matches_taylor_series(seed in any::<u64>(), n in 1usize..=6, t in -2.0f64..2.0, hbar in 0.5f64..2.0) {
        let h = random_hermitian(n, 1.0, &mut rng(seed));
        let ours = unitary_exp(&h, t, hbar).unwrap();
        let oracle = expm_taylor(&flat(h.matrix()), n, t / hbar);
        let diff = ours.as_slice().iter().zip(&oracle).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-10);
    }
}

#[test]
fn degenerate_spectrum_is_handled() {
    // Projector onto a random vector has a (n-1)-fold degenerate zero.
    let mut r = rng(7);
    let v = common::ket(6, &mut r);
    let p = HermitianOperator::projector(&v);
    let eig = p.eig().unwrap();
    assert!(eig.values[..5].iter().all(|x| x.abs() < 1e-14));
    assert!((eig.values[5] - 1.0).abs() < 1e-14);
    assert!(eig.reconstruct().max_abs_diff(p.matrix()) < 1e-14);
    let _ = C64::new(0.0, 0.0);
}
