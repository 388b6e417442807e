//! Regularly varying response functions.
//!
//! The catalog is closed: `h(t) = c t^beta` or `h(t) = t^beta log(e+t)^p`,
//! optionally perturbed on an initial window `[0, t0]` by a piecewise-linear
//! bounded-variation prefix that vanishes at `t0`. A closed catalog keeps
//! the limit-theorem hypotheses checkable by construction: `h` is eventually
//! nondecreasing, eventually positive, and `h -> infinity` is enforced in
//! the slowly varying case.

use serde::Serialize;

use crate::error::{Error, Result};

/// Slowly varying factor of the response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SlowlyVarying {
    /// h(t) = coeff * t^beta
    Const { coeff: f64 },
    /// h(t) = t^beta * log(e + t)^power
    LogPower { power: f64 },
}

/// Response function `h` of regular-variation index `beta >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseFn {
    beta: f64,
    family: SlowlyVarying,
    /// Piecewise-linear perturbation knots `(time, value)`; empty means no
    /// prefix. When present, the first knot sits at time 0 and the last has
    /// value 0, so the perturbation vanishes from its last knot on.
    prefix: Vec<(f64, f64)>,
}

impl ResponseFn {
    pub fn new(beta: f64, family: SlowlyVarying, prefix: Vec<(f64, f64)>) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!(
                "response: index beta must be >= 0, got {beta}"
            )));
        }
        match family {
            SlowlyVarying::Const { coeff } => {
                if !(coeff > 0.0) {
                    return Err(Error::Domain(format!(
                        "response: coefficient must be positive, got {coeff}"
                    )));
                }
                if beta == 0.0 {
                    return Err(Error::Domain(
                        "response: beta = 0 with a constant slowly varying part does not \
                         diverge; use the log-power family with positive power"
                            .into(),
                    ));
                }
            }
            SlowlyVarying::LogPower { power } => {
                if !power.is_finite() {
                    return Err(Error::Domain("response: log power must be finite".into()));
                }
                if beta == 0.0 && power <= 0.0 {
                    return Err(Error::Domain(format!(
                        "response: beta = 0 requires a positive log power so that h diverges, \
                         got {power}"
                    )));
                }
            }
        }
        if !prefix.is_empty() {
            if prefix[0].0 != 0.0 {
                return Err(Error::Domain(
                    "response: prefix knots must start at time 0".into(),
                ));
            }
            for w in prefix.windows(2) {
                if !(w[1].0 > w[0].0) {
                    return Err(Error::Domain(
                        "response: prefix knot times must be strictly increasing".into(),
                    ));
                }
            }
            if prefix.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                return Err(Error::Domain("response: prefix knots must be finite".into()));
            }
            let last = prefix.last().unwrap();
            if last.1 != 0.0 {
                return Err(Error::Domain(
                    "response: the prefix perturbation must vanish at its last knot".into(),
                ));
            }
        }
        let h = Self { beta, family, prefix };
        h.check_eventually_nondecreasing()?;
        Ok(h)
    }

    /// Pure power response `c t^beta`.
    pub fn power(beta: f64, coeff: f64) -> Result<Self> {
        Self::new(beta, SlowlyVarying::Const { coeff }, Vec::new())
    }

    /// Log-corrected response `t^beta log(e+t)^p`.
    pub fn log_power(beta: f64, power: f64) -> Result<Self> {
        Self::new(beta, SlowlyVarying::LogPower { power }, Vec::new())
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn family(&self) -> SlowlyVarying {
        self.family
    }

    pub fn prefix(&self) -> &[(f64, f64)] {
        &self.prefix
    }

    /// End of the perturbation window (0 when there is no prefix).
    pub fn t0(&self) -> f64 {
        self.prefix.last().map_or(0.0, |(t, _)| *t)
    }

    pub fn label(&self) -> String {
        let base = match self.family {
            SlowlyVarying::Const { coeff } => format!("{coeff}*t^{}", self.beta),
            SlowlyVarying::LogPower { power } => {
                format!("t^{}*log(e+t)^{power}", self.beta)
            }
        };
        if self.prefix.is_empty() {
            base
        } else {
            format!("{base} + prefix[0,{}]", self.t0())
        }
    }

    fn base_eval(&self, t: f64) -> f64 {
        match self.family {
            SlowlyVarying::Const { coeff } => coeff * t.powf(self.beta),
            SlowlyVarying::LogPower { power } => {
                t.powf(self.beta) * (std::f64::consts::E + t).ln().powf(power)
            }
        }
    }

    /// Derivative of the unperturbed response for t > 0 (used by the
    /// Stieltjes quadrature of the prelimit covariance).
    pub(crate) fn base_derivative(&self, t: f64) -> f64 {
        debug_assert!(t > 0.0);
        let e = std::f64::consts::E;
        match self.family {
            SlowlyVarying::Const { coeff } => coeff * self.beta * t.powf(self.beta - 1.0),
            SlowlyVarying::LogPower { power } => {
                let l = (e + t).ln();
                self.beta * t.powf(self.beta - 1.0) * l.powf(power)
                    + t.powf(self.beta) * power * l.powf(power - 1.0) / (e + t)
            }
        }
    }

    fn prefix_eval(&self, t: f64) -> f64 {
        if self.prefix.is_empty() || t >= self.t0() {
            return 0.0;
        }
        let knots = &self.prefix;
        let idx = knots.partition_point(|(kt, _)| *kt <= t);
        // idx >= 1 because the first knot sits at 0 <= t.
        let (t0, v0) = knots[idx - 1];
        let (t1, v1) = knots[idx];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Evaluate `h(t)` for `t >= 0`.
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "response evaluated at negative age {t}");
        self.base_eval(t) + self.prefix_eval(t)
    }

    /// Dense-grid check that `h` is nondecreasing and positive past the
    /// perturbation window.
    fn check_eventually_nondecreasing(&self) -> Result<()> {
        let start = self.t0();
        let end = 10.0 * start + 1e3;
        let n = 10_000;
        let mut prev = self.eval(start);
        for i in 1..=n {
            let t = start + (end - start) * i as f64 / n as f64;
            let cur = self.eval(t);
            if cur + 1e-12 * (1.0 + cur.abs()) < prev {
                return Err(Error::AssumptionViolation(format!(
                    "response is decreasing at t = {t} beyond its prefix window"
                )));
            }
            if t > start && cur <= 0.0 {
                return Err(Error::AssumptionViolation(format!(
                    "response is not positive at t = {t}"
                )));
            }
            prev = cur;
        }
        Ok(())
    }

    /// Finite-scale regular-variation estimate `log2(h(2t)/h(t))` at
    /// `t = 1e6`, checked against `beta`.
    ///
    /// For the pure power family the estimate is exact and the tolerance is
    /// 0.01. A log factor shifts the estimate by `p log2(L(2t)/L(t))`, about
    /// 0.07 p at this scale, so the log-power band is `0.1 max(1, |p|)`.
    pub fn check_regular_variation(&self) -> Result<f64> {
        let t = 1e6;
        let estimate = (self.eval(2.0 * t) / self.eval(t)).log2();
        let tol = match self.family {
            SlowlyVarying::Const { .. } => 0.01,
            SlowlyVarying::LogPower { power } => 0.1 * power.abs().max(1.0),
        };
        if (estimate - self.beta).abs() > tol {
            return Err(Error::AssumptionViolation(format!(
                "regular-variation estimate {estimate:.4} differs from declared index {} by \
                 more than {tol}",
                self.beta
            )));
        }
        Ok(estimate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_examples() {
        let h = ResponseFn::power(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(h.eval(2.5), 2.5, epsilon = 1e-14);

        let h = ResponseFn::log_power(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(h.eval(0.0), 1.0, epsilon = 1e-14); // log(e) = 1

        let h = ResponseFn::power(0.5, 2.0).unwrap();
        assert_abs_diff_eq!(h.eval(4.0), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        assert!(ResponseFn::power(-1.0, 1.0).is_err());
        assert!(ResponseFn::power(1.0, 0.0).is_err());
        // beta = 0 must diverge
        assert!(ResponseFn::power(0.0, 1.0).is_err());
        assert!(ResponseFn::log_power(0.0, 0.0).is_err());
        assert!(ResponseFn::log_power(0.0, -1.0).is_err());
        assert!(ResponseFn::log_power(0.0, 1.0).is_ok());
    }

    #[test]
    fn prefix_shape_is_validated() {
        // must start at 0
        assert!(ResponseFn::new(
            1.0,
            SlowlyVarying::Const { coeff: 1.0 },
            vec![(0.5, 1.0), (1.0, 0.0)]
        )
        .is_err());
        // must vanish at the last knot
        assert!(ResponseFn::new(
            1.0,
            SlowlyVarying::Const { coeff: 1.0 },
            vec![(0.0, 1.0), (1.0, 0.5)]
        )
        .is_err());
        let h = ResponseFn::new(
            1.0,
            SlowlyVarying::Const { coeff: 1.0 },
            vec![(0.0, 0.4), (0.5, -0.2), (1.0, 0.0)],
        )
        .unwrap();
        assert_abs_diff_eq!(h.eval(0.0), 0.4, epsilon = 1e-14);
        assert_abs_diff_eq!(h.eval(0.25), 0.25 + 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(h.eval(2.0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h.t0(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn regular_variation_pure_power_is_exact() {
        let h = ResponseFn::power(1.0, 3.0).unwrap();
        let est = h.check_regular_variation().unwrap();
        assert_abs_diff_eq!(est, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn regular_variation_log_cases() {
        // log2(log(e + 2e6)/log(e + 1e6)) ~ 0.0706, inside the beta = 0 band.
        let h = ResponseFn::log_power(0.0, 1.0).unwrap();
        let est = h.check_regular_variation().unwrap();
        assert_abs_diff_eq!(est, 0.0706, epsilon = 1e-3);

        // The squared log shifts the estimate by twice that amount.
        let h = ResponseFn::log_power(0.5, 2.0).unwrap();
        let est = h.check_regular_variation().unwrap();
        assert_abs_diff_eq!(est, 0.5 + 2.0 * 0.0706, epsilon = 2e-3);
    }

    #[test]
    fn scaling_self_consistency_pure_power() {
        for beta in [0.5, 1.0, 2.0] {
            let h = ResponseFn::power(beta, 1.7).unwrap();
            let t = 1e6;
            for x in [0.5, 2.0, 5.0] {
                let ratio = h.eval(t * x) / h.eval(t);
                assert!(
                    (ratio / x.powf(beta) - 1.0).abs() < 0.01,
                    "beta={beta} x={x} ratio={ratio}"
                );
            }
        }
    }

    #[test]
    fn scaling_of_log_family_improves_with_scale() {
        let h = ResponseFn::log_power(0.5, 1.0).unwrap();
        let err_at = |t: f64, x: f64| (h.eval(t * x) / h.eval(t) / x.powf(0.5) - 1.0).abs();
        for x in [0.5, 2.0, 5.0] {
            assert!(err_at(1e10, x) < err_at(1e6, x));
        }
    }

    #[test]
    fn nondecreasing_and_positive_past_prefix() {
        let h = ResponseFn::log_power(0.3, -0.5).unwrap(); // eventually nondecreasing
        assert!(h.eval(100.0) > 0.0);
        let probe = [1.0, 5.0, 50.0, 500.0, 5000.0];
        for w in probe.windows(2) {
            assert!(h.eval(w[1]) >= h.eval(w[0]));
        }
    }
}
