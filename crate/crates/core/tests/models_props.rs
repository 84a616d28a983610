mod common;

use num_complex::Complex64 as C64;
use qsl_core::dynamics::{evolve_full, evolve_separable, rate_full};
use qsl_core::models::{
    analytic_rates, build_nmode, build_qudit, build_swap, ghz_state, nmode_separability_extremes, nmode_speedup,
    qudit_speedup, NModeModelParams, QuditModelParams, SwapModelParams,
};
use qsl_core::speedlimits::{qsl_sep_bound, SolverConfig};
use qsl_core::{PureState, SpaceDescriptor};
use std::f64::consts::SQRT_2;

fn cfg() -> SolverConfig {
    SolverConfig { starts: 16, ..Default::default() }
}

#[test]
fn swap_ratio_is_sqrt_two() {
    for kappa in [1.0, -2.0, 0.3] {
        let (h, _) = build_swap(&SwapModelParams::new(kappa, C64::new(0.5, 0.0)).unwrap(), 1.0).unwrap();
        let r = qsl_sep_bound(&h, &SpaceDescriptor::uniform(2, 2).unwrap(), &cfg(), 1.0).unwrap();
        assert!((r.qsl - 2.0 * kappa.abs()).abs() < 1e-12);
        assert!((r.ratio.value().unwrap() - SQRT_2).abs() < 1e-9);
    }
}

#[test]
fn qudit_ratio_scales_linearly() {
    for d in 2..=5 {
        let h = build_qudit(&QuditModelParams::new(d, 1.0, 3.0).unwrap()).unwrap();
        let r = qsl_sep_bound(&h, &SpaceDescriptor::uniform(2, d).unwrap(), &cfg(), 1.0).unwrap();
        let got = r.ratio.value().unwrap();
        assert!((got - qudit_speedup(d)).abs() < 1e-6 * qudit_speedup(d), "d={d}: {got}");
    }
}

#[test]
fn nmode_ratio_and_extremes() {
    let gamma = C64::new(0.8, -0.6);
    for n in 2..=6 {
        let p = NModeModelParams::new(n, 0, gamma).unwrap();
        let h = build_nmode(&p).unwrap();
        let r = qsl_sep_bound(&h, &SpaceDescriptor::uniform(n, 2).unwrap(), &cfg(), 1.0).unwrap();
        let (lo, hi) = nmode_separability_extremes(&p).unwrap();
        assert!((r.e_max_sep - hi).abs() < 1e-8 && (r.e_min_sep - lo).abs() < 1e-8, "n={n}");
        assert!((r.ratio.value().unwrap() - nmode_speedup(n)).abs() < 1e-6 * nmode_speedup(n));
    }
}

#[test]
fn flip_related_splits_share_extremes() {
    let gamma = C64::new(0.2, 0.5);
    for n in 2..=5 {
        let reference = qsl_sep_bound(
            &build_nmode(&NModeModelParams::new(n, 0, gamma).unwrap()).unwrap(),
            &SpaceDescriptor::uniform(n, 2).unwrap(),
            &cfg(),
            1.0,
        )
        .unwrap();
        for k in 1..=n {
            let h = build_nmode(&NModeModelParams::new(n, k, gamma).unwrap()).unwrap();
            let r = qsl_sep_bound(&h, &SpaceDescriptor::uniform(n, 2).unwrap(), &cfg(), 1.0).unwrap();
            assert!((r.e_max_sep - reference.e_max_sep).abs() < 1e-9);
            assert!((r.e_min_sep - reference.e_min_sep).abs() < 1e-9);
            assert!((r.e_max - reference.e_max).abs() < 1e-12 && (r.e_min - reference.e_min).abs() < 1e-12);
        }
    }
}

#[test]
fn ghz_state_saturates_full_limit() {
    for (n, k) in [(2, 0), (3, 1), (5, 2), (6, 6)] {
        let p = NModeModelParams::new(n, k, C64::new(-1.2, 0.5)).unwrap();
        let h = build_nmode(&p).unwrap();
        let plus = ghz_state(&p, 1.0).unwrap();
        let minus = ghz_state(&p, -1.0).unwrap();
        let mix: Vec<C64> = plus.iter().zip(&minus).map(|(a, b)| (a + b) * std::f64::consts::FRAC_1_SQRT_2).collect();
        let psi = PureState::new(SpaceDescriptor::uniform(n, 2).unwrap(), mix).unwrap();
        let rate = rate_full(&h, &psi, 1.0).unwrap().rate;
        assert!((rate - 2.0 * p.gamma.norm()).abs() < 1e-12);
    }
}

#[test]
fn swap_rates_are_constant_along_trajectories() {
    for q in [0.2, 0.5, 0.9] {
        let params = SwapModelParams::new(1.0, C64::from(q)).unwrap();
        let (h, st) = build_swap(&params, 1.0).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.3).collect();
        let (want_full, want_sep) = analytic_rates(&params);
        let full = evolve_full(&h, &st.embed(), &times, 1.0).unwrap();
        let sep = evolve_separable(&h, &st, &times, 0.005, 1.0).unwrap();
        assert!(full.rates.iter().all(|r| (r - want_full).abs() < 1e-7));
        assert!(sep.rates.iter().all(|r| (r - want_sep).abs() < 1e-7));
    }
}
