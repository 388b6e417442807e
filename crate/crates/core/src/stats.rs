//! Empirical moments, jackknife standard errors and Kolmogorov–Smirnov
//! statistics used by the Monte Carlo verification harness.

use statrs::function::erf::erf;

use crate::error::{Error, Result};

pub fn normal_cdf(x: f64, sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    0.5 * (1.0 + erf(x / (sigma * std::f64::consts::SQRT_2)))
}

/// Sample mean vector and sample covariance matrix (denominator `n - 1`) of
/// `n` rows of dimension `k`.
pub fn sample_mean_cov(rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "moment estimation needs at least 2 rows, got {n}"
        )));
    }
    let k = rows[0].len();
    let nf = n as f64;
    let mut s1 = vec![0.0; k];
    let mut s2 = vec![vec![0.0; k]; k];
    for row in rows {
        debug_assert_eq!(row.len(), k);
        for a in 0..k {
            s1[a] += row[a];
            for b in a..k {
                s2[a][b] += row[a] * row[b];
            }
        }
    }
    let mean: Vec<f64> = s1.iter().map(|x| x / nf).collect();
    let mut cov = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a..k {
            let c = (s2[a][b] - s1[a] * s1[b] / nf) / (nf - 1.0);
            cov[a][b] = c;
            cov[b][a] = c;
        }
    }
    Ok((mean, cov))
}

/// Leave-one-out jackknife standard errors for every entry of the sample
/// covariance matrix. Runs in `O(n k^2)` using sufficient statistics.
pub fn jackknife_cov_se(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = rows.len();
    if n < 3 {
        return Err(Error::Domain(format!(
            "jackknife needs at least 3 rows, got {n}"
        )));
    }
    let k = rows[0].len();
    let nf = n as f64;
    let mut s1 = vec![0.0; k];
    let mut s2 = vec![vec![0.0; k]; k];
    for row in rows {
        for a in 0..k {
            s1[a] += row[a];
            for b in a..k {
                s2[a][b] += row[a] * row[b];
            }
        }
    }
    // First pass: mean over i of the leave-one-out estimates; second pass:
    // their spread. Both reuse the totals.
    let loo = |i: usize, a: usize, b: usize| -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let va = rows[i][a];
        let vb = rows[i][b];
        let s1a = s1[a] - va;
        let s1b = s1[b] - vb;
        let s2ab = s2[a][b] - va * vb;
        (s2ab - s1a * s1b / (nf - 1.0)) / (nf - 2.0)
    };
    let mut mean_loo = vec![vec![0.0; k]; k];
    for i in 0..n {
        for a in 0..k {
            for b in a..k {
                mean_loo[a][b] += loo(i, a, b);
            }
        }
    }
    for a in 0..k {
        for b in a..k {
            mean_loo[a][b] /= nf;
        }
    }
    let mut se = vec![vec![0.0; k]; k];
    for i in 0..n {
        for a in 0..k {
            for b in a..k {
                let d = loo(i, a, b) - mean_loo[a][b];
                se[a][b] += d * d;
            }
        }
    }
    for a in 0..k {
        for b in a..k {
            let v = ((nf - 1.0) / nf) * se[a][b];
            se[a][b] = v.sqrt();
            se[b][a] = se[a][b];
        }
    }
    Ok(se)
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n - F|` against the given
/// continuous distribution function. Sorts a copy of the sample.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Domain("KS statistic of an empty sample".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("NaN in KS sample"));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Domain("KS statistic of an empty sample".into()));
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|p, q| p.partial_cmp(q).expect("NaN in KS sample"));
    b.sort_by(|p, q| p.partial_cmp(q).expect("NaN in KS sample"));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = a[i].min(b[j]);
        while i < n && a[i] <= t {
            i += 1;
        }
        while j < m && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    Ok(d)
}

/// Asymptotic critical value for the one-sample KS test:
/// `sqrt(-ln(level/2) / 2) / sqrt(n)`. At level 0.01 the numerator is 1.6276.
pub fn ks_critical(n: usize, level: f64) -> f64 {
    debug_assert!(n > 0 && level > 0.0 && level < 1.0);
    (-(level / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Critical value for the two-sample statistic with sizes `n`, `m`.
pub fn ks_two_sample_critical(n: usize, m: usize, level: f64) -> f64 {
    let scale = ((n + m) as f64 / (n as f64 * m as f64)).sqrt();
    (-(level / 2.0).ln() / 2.0).sqrt() * scale
}
