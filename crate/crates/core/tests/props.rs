//! Property-based invariants across the toolkit.

use proptest::prelude::*;
use shotnoise_core::counting::{IncrementLaw, ModelSpec, ModelTag, ShotTimes, ZERO_DELAY};
use shotnoise_core::fracint::{frac_integrate, FracIntSpec};
use shotnoise_core::gauss::{bm_cov, fbm_cov, rl_cov, timechanged_cov, GaussianPath, PathKind};
use shotnoise_core::grid::TimeGrid;
use shotnoise_core::response::ResponseFn;
use shotnoise_core::shotnoise::eval_x;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fbm_cov_is_self_similar(
        h in 0.05f64..0.95,
        u in 0.0f64..10.0,
        v in 0.0f64..10.0,
        c in 0.01f64..100.0,
    ) {
        let direct = fbm_cov(h, c * u, c * v).unwrap();
        let scaled = c.powf(2.0 * h) * fbm_cov(h, u, v).unwrap();
        let tol = 1e-10 * (1.0 + direct.abs());
        prop_assert!((direct - scaled).abs() <= tol, "{direct} vs {scaled}");
    }

    #[test]
    fn fbm_cov_at_half_and_rl_at_zero_reduce_to_bm(
        u in 0.0f64..10.0,
        v in 0.0f64..10.0,
    ) {
        let bm = bm_cov(u, v).unwrap();
        prop_assert!((fbm_cov(0.5, u, v).unwrap() - bm).abs() <= 1e-12 * (1.0 + bm));
        prop_assert!((rl_cov(0.0, u, v).unwrap() - bm).abs() <= 1e-8 * (1.0 + bm));
        prop_assert!((timechanged_cov(1.0, u, v).unwrap() - bm).abs() <= 1e-12 * (1.0 + bm));
    }

    #[test]
    fn rl_cov_is_symmetric(
        rho in -0.4f64..3.0,
        u in 0.01f64..5.0,
        v in 0.01f64..5.0,
    ) {
        let a = rl_cov(rho, u, v).unwrap();
        let b = rl_cov(rho, v, u).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn count_is_a_nondecreasing_step_function(
        mut times in proptest::collection::vec(0.0f64..10.0, 0..40),
        probes in proptest::collection::vec(0.0f64..10.0, 1..20),
    ) {
        times.sort_by(f64::total_cmp);
        let shots = ShotTimes::from_times(10.0, times.clone(), ModelTag::RandomWalk).unwrap();
        let mut sorted_probes = probes.clone();
        sorted_probes.sort_by(f64::total_cmp);
        let mut prev = 0;
        for &t in &sorted_probes {
            let c = shots.count(t).unwrap();
            prop_assert!(c >= prev);
            prev = c;
            // right continuity on the grid: counting just past t cannot drop
            let just_past = (t + 1e-9).min(10.0);
            prop_assert!(shots.count(just_past).unwrap() >= c);
        }
        // total count
        prop_assert_eq!(shots.count(10.0).unwrap(), times.len());
    }

    #[test]
    fn generated_times_lie_in_the_horizon_sorted(
        seed in 0u64..1000,
        horizon in 1.0f64..50.0,
    ) {
        let model = ModelSpec::PerturbedWalk {
            increment: IncrementLaw::Exponential { rate: 1.0 },
            perturbation: IncrementLaw::Uniform { lo: 0.0, hi: 1.0 },
        };
        let shots = model.generate(horizon, seed, 0).unwrap();
        prop_assert!(shots.times().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(shots.times().iter().all(|&s| (0.0..=horizon).contains(&s)));
    }

    #[test]
    fn shot_noise_is_nonnegative_for_nonnegative_nondecreasing_response(
        mut times in proptest::collection::vec(0.0f64..8.0, 0..30),
        t in 0.0f64..8.0,
        beta in 0.2f64..2.0,
    ) {
        times.sort_by(f64::total_cmp);
        let shots = ShotTimes::from_times(8.0, times, ModelTag::RandomWalk).unwrap();
        let h = ResponseFn::power(beta, 1.0).unwrap();
        prop_assert!(eval_x(&shots, &h, &[t]).unwrap()[0] >= 0.0);
    }

    #[test]
    fn eval_x_is_additive_over_shot_subsets(
        mut times in proptest::collection::vec(0.0f64..8.0, 2..30),
        split in 1usize..29,
        t in 0.0f64..8.0,
    ) {
        times.sort_by(f64::total_cmp);
        let split = split.min(times.len() - 1);
        let h = ResponseFn::power(1.0, 2.0).unwrap();
        let all = ShotTimes::from_times(8.0, times.clone(), ModelTag::RandomWalk).unwrap();
        let left = ShotTimes::from_times(8.0, times[..split].to_vec(), ModelTag::RandomWalk).unwrap();
        let right = ShotTimes::from_times(8.0, times[split..].to_vec(), ModelTag::RandomWalk).unwrap();
        let total = eval_x(&all, &h, &[t]).unwrap()[0];
        let sum = eval_x(&left, &h, &[t]).unwrap()[0] + eval_x(&right, &h, &[t]).unwrap()[0];
        prop_assert!((total - sum).abs() <= 1e-9 * (1.0 + total.abs()));
    }

    #[test]
    fn frac_integrate_positive_scales_exactly(
        lambda in -5.0f64..5.0,
        rho in 0.3f64..2.5,
        seed in 0u64..500,
    ) {
        let grid = TimeGrid::new(1.0, 65).unwrap();
        let base = shotnoise_core::gauss::sample_path(
            shotnoise_core::gauss::DriverKind::Bm, &grid, seed, 0).unwrap();
        let scaled = GaussianPath {
            grid: grid.clone(),
            values: base.values.iter().map(|v| lambda * v).collect(),
            kind: PathKind::Driver(shotnoise_core::gauss::DriverKind::Bm),
        };
        let spec = FracIntSpec::positive(rho).unwrap();
        let y = frac_integrate(&base, &spec).unwrap();
        let y_scaled = frac_integrate(&scaled, &spec).unwrap();
        for (a, b) in y.values.iter().zip(&y_scaled.values) {
            prop_assert!((lambda * a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn response_eval_nonnegative_and_rv_estimate_close_for_powers(
        beta in 0.1f64..3.0,
        coeff in 0.1f64..10.0,
    ) {
        let h = ResponseFn::power(beta, coeff).unwrap();
        prop_assert!(h.eval(0.0) == 0.0);
        prop_assert!(h.eval(2.0) > 0.0);
        let est = h.check_regular_variation().unwrap();
        prop_assert!((est - beta).abs() < 0.01);
    }
}
