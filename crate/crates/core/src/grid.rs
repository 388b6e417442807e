use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform evaluation grid on `[0, t_max]`, the discrete stand-in for
/// continuous time. The first point is always exactly `0.0` and spacing is
/// uniform to within one part in 1e12.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    t_max: f64,
    values: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t_max: f64, n_points: usize) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Domain(format!(
                "time grid: t_max must be positive and finite, got {t_max}"
            )));
        }
        if n_points < 2 {
            return Err(Error::Domain(format!(
                "time grid: need at least 2 points, got {n_points}"
            )));
        }
        let step = t_max / (n_points - 1) as f64;
        let mut values: Vec<f64> = (0..n_points).map(|i| i as f64 * step).collect();
        // Pin the endpoint so t_max is represented exactly.
        values[n_points - 1] = t_max;
        Ok(Self { t_max, values })
    }

    /// Grid with `2^m + 1` points, the shape required by the dyadic-scale
    /// regularity estimator.
    pub fn dyadic(t_max: f64, m: u32) -> Result<Self> {
        if m > 30 {
            return Err(Error::Domain(format!("time grid: level {m} too fine")));
        }
        Self::new(t_max, (1usize << m) + 1)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.t_max / (self.values.len() - 1) as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.values
    }

    /// Restriction to every other point (same `t_max`, half the resolution).
    /// Requires an odd point count so the endpoint is kept.
    pub fn coarsen(&self) -> Result<Self> {
        let n = self.values.len();
        if n % 2 == 0 || n < 3 {
            return Err(Error::Domain(format!(
                "time grid: cannot coarsen a {n}-point grid"
            )));
        }
        let values: Vec<f64> = self.values.iter().copied().step_by(2).collect();
        Ok(Self { t_max: self.t_max, values })
    }
}
