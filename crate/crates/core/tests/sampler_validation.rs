//! Distributional validation of the path samplers: empirical covariances
//! against the analytic kernels, and the circulant fractional-noise fast
//! path against the exact factorization. The full-size soundness run lives
//! in the acceptance suite; these use lighter path counts.

use shotnoise_core::gauss::{DriverKind, FgnSampler, PathSampler};
use shotnoise_core::grid::TimeGrid;
use shotnoise_core::par;
use shotnoise_core::stats::sample_mean_cov;

/// Empirical covariance of `n_paths` driver samples on the nonzero grid
/// points, plus the analytic covariance entries.
fn empirical_vs_analytic(
    kind: DriverKind,
    sampler: &PathSampler,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let rows: Vec<Vec<f64>> =
        par::map_indexed(n_paths, |i| sampler.sample(seed, i as u64).values[1..].to_vec());
    let (_, emp) = sample_mean_cov(&rows).unwrap();
    let pts = &grid.points()[1..];
    let k = pts.len();
    let mut theo = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            theo[i][j] = kind.cov(pts[i], pts[j]);
        }
    }
    (emp, theo)
}

fn assert_within_se(emp: &[Vec<f64>], theo: &[Vec<f64>], n_paths: usize, z: f64, label: &str) {
    let k = theo.len();
    for i in 0..k {
        for j in 0..k {
            // Gaussian fourth-moment formula for the covariance estimator
            let var_est = (theo[i][i] * theo[j][j] + theo[i][j] * theo[i][j]) / n_paths as f64;
            let se = var_est.sqrt();
            let dev = (emp[i][j] - theo[i][j]).abs();
            assert!(
                dev <= z * se,
                "{label} entry ({i},{j}): |{} - {}| = {dev} > {z} SE = {}",
                emp[i][j],
                theo[i][j],
                z * se
            );
        }
    }
}

#[test]
fn driver_covariances_match_analytic_kernels() {
    let grid = TimeGrid::new(1.0, 5).unwrap();
    let n_paths = 4000;
    let cases = [
        (DriverKind::Bm, 101u64),
        (DriverKind::Fbm { hurst: 0.75 }, 102),
        (DriverKind::Fbm { hurst: 0.3 }, 103),
        (DriverKind::Rl { rho: 1.0 }, 104),
        (DriverKind::TimeChangedBm { exponent: 2.0 }, 105),
    ];
    for (kind, seed) in cases {
        let sampler = PathSampler::new(kind, &grid).unwrap();
        let (emp, theo) = empirical_vs_analytic(kind, &sampler, &grid, n_paths, seed);
        assert_within_se(&emp, &theo, n_paths, 5.0, &kind.label());
    }
}

#[test]
fn exact_factorized_sampler_agrees_with_fast_paths() {
    // The exact sampler must reproduce the same covariances as the
    // increment/fgn fast paths (all exact in law).
    let grid = TimeGrid::new(2.0, 5).unwrap();
    let n_paths = 4000;
    for (kind, seed) in [
        (DriverKind::Bm, 7u64),
        (DriverKind::Fbm { hurst: 0.6 }, 8),
        (DriverKind::TimeChangedBm { exponent: 1.5 }, 9),
    ] {
        let exact = PathSampler::exact(kind, &grid).unwrap();
        let (emp, theo) = empirical_vs_analytic(kind, &exact, &grid, n_paths, seed);
        assert_within_se(&emp, &theo, n_paths, 5.0, &format!("exact {}", kind.label()));
    }
}

#[test]
fn circulant_fgn_matches_exact_factorization_lags() {
    // Compare empirical lag-0..3 autocovariances of the two samplers on the
    // same sequence length.
    let d = 0.25;
    let n = 256;
    let n_draws = 3000;
    let chol = FgnSampler::new_cholesky(d, n).unwrap();
    let circ = FgnSampler::new_circulant(d, n).unwrap();
    let lag_cov = |sampler: &FgnSampler, seed: u64| -> Vec<f64> {
        let mut acc = vec![0.0; 4];
        let mut count = vec![0.0; 4];
        for i in 0..n_draws {
            let x = sampler.sample(seed, i as u64);
            for lag in 0..4 {
                for t in 0..(n - lag) {
                    acc[lag] += x[t] * x[t + lag];
                    count[lag] += 1.0;
                }
            }
        }
        acc.iter().zip(&count).map(|(a, c)| a / c).collect()
    };
    let from_chol = lag_cov(&chol, 1);
    let from_circ = lag_cov(&circ, 2);
    for lag in 0..4 {
        let gamma = shotnoise_core::gauss::fgn_autocov(d, lag).unwrap();
        // generous band: averaged over n*draws correlated terms
        assert!(
            (from_chol[lag] - gamma).abs() < 0.02,
            "cholesky lag {lag}: {} vs {gamma}",
            from_chol[lag]
        );
        assert!(
            (from_circ[lag] - gamma).abs() < 0.02,
            "circulant lag {lag}: {} vs {gamma}",
            from_circ[lag]
        );
    }
}

#[test]
fn fbm_variance_at_unit_time_is_one() {
    let grid = TimeGrid::new(1.0, 5).unwrap();
    let n_paths = 4000;
    let sampler = PathSampler::new(DriverKind::Fbm { hurst: 0.75 }, &grid).unwrap();
    let values: Vec<f64> = par::map_indexed(n_paths, |i| {
        *sampler.sample(202, i as u64).values.last().unwrap()
    });
    let var = values.iter().map(|v| v * v).sum::<f64>() / n_paths as f64;
    // Var of the variance estimator of N(0,1) is 2/n
    let se = (2.0f64 / n_paths as f64).sqrt();
    assert!((var - 1.0).abs() < 5.0 * se, "variance {var}");
}

#[test]
fn long_fgn_uses_circulant_and_stays_unit_variance() {
    let d = 0.1;
    let n = 8192; // beyond the exact-factorization cutoff
    let x = shotnoise_core::gauss::sample_fgn_sequence(d, n, 11, 0).unwrap();
    assert_eq!(x.len(), n);
    let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    assert!((var - 1.0).abs() < 0.1, "marginal variance {var}");
}
