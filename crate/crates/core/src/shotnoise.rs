//! Shot noise evaluation: `X(t) = sum_k h(t - S_k) 1{S_k <= t}`, the
//! centering integral `int_[0,t] h(t-y) db(y)`, and the fully normalized
//! process `(X(t u) - centering(t u)) / (a(t) h(t))` on a scaled grid.

use serde::Serialize;

use crate::counting::{Centering, NormalizationTriple, ShotTimes};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad;
use crate::response::ResponseFn;

/// Evaluate `X` at each requested time by direct summation over the sorted
/// shot list (binary search truncates the sum). Exact summation is used
/// throughout: desk-scale shot counts make discretized convolutions
/// unnecessary and the values feed verification statistics.
pub fn eval_x(shots: &ShotTimes, h: &ResponseFn, times: &[f64]) -> Result<Vec<f64>> {
    let sorted = shots.times();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t < 0.0 || t > shots.horizon() {
            return Err(Error::Domain(format!(
                "shot noise evaluated at t = {t} outside [0, {}]",
                shots.horizon()
            )));
        }
        let upto = sorted.partition_point(|&s| s <= t);
        let mut acc = 0.0;
        for &s in &sorted[..upto] {
            acc += h.eval(t - s);
        }
        out.push(acc);
    }
    Ok(out)
}

/// The centering integral `int_[0,t] h(t-y) db(y)`.
///
/// Every catalog centering satisfies `b(0) = 0`, so there is no atom term.
/// Absolutely continuous parts are integrated adaptively to absolute
/// tolerance `1e-8 (1 + |result|)`; power-law densities with exponent below
/// one are regularized by the substitution `y = t s^{1/e}`.
pub fn centering(h: &ResponseFn, b: &Centering, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Domain(format!("centering evaluated at t = {t} < 0")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let rel_tol = 1e-8;
    // Kinks of h(t - y) sit at y = t - knot for prefix knots; density kinks
    // are the law's breakpoints.
    let mut breaks: Vec<f64> = b.density_breakpoints();
    for &(kt, _) in h.prefix() {
        breaks.push(t - kt);
    }
    let e = b.density_power_at_zero();
    if e > -1.0 && e < 0.0 {
        // int_0^t g(y) c y^{e'} ... with density ~ y^{e}: substitute
        // y = t s^{1/(e+1)} so the measure becomes bounded.
        let q = e + 1.0;
        let f = |s: f64| {
            let y = t * s.powf(1.0 / q);
            // density(y) y^{-e} is bounded; reassemble the integrand as
            // density(y) * h(t-y) * dy/ds with the singular parts combined.
            // dy/ds = (t/q) s^{1/q - 1}; density(y) ~ c y^e, and
            // y^e s^{1/q-1} = t^e s^{e/q + 1/q - 1} = t^e.
            let bounded = b.density(y) / y.powf(e);
            bounded * h.eval(t - y) * (t.powf(e + 1.0) / q)
        };
        let est = quad::integrate(|s| f(s.max(1e-300)), 0.0, 1.0, 1e-4)?;
        let tol = rel_tol * (1.0 + est.abs());
        quad::integrate(|s| f(s.max(1e-300)), 0.0, 1.0, tol)
    } else {
        let f = |y: f64| h.eval(t - y) * b.density(y.max(1e-300));
        let est = quad::integrate_split(&f, 0.0, t, &breaks, 1e-4 * (1.0 + t))?;
        let tol = rel_tol * (1.0 + est.abs());
        quad::integrate_split(&f, 0.0, t, &breaks, tol)
    }
}

/// One normalized shot noise path sampled at scaled times `t u` for probe
/// values `u`.
#[derive(Debug, Clone, Serialize)]
pub struct NormalizedPath {
    pub scale_t: f64,
    pub u_points: Vec<f64>,
    pub values: Vec<f64>,
}

/// Normalized values `(X(t u) - int_[0,tu] h(tu - y) db(y)) / (a(t) h(t))`
/// at the given probe points.
pub fn normalize_at(
    shots: &ShotTimes,
    h: &ResponseFn,
    triple: &NormalizationTriple,
    scale_t: f64,
    u_points: &[f64],
) -> Result<Vec<f64>> {
    let a_t = triple.scale.eval(scale_t)?;
    let h_t = h.eval(scale_t);
    let denom = a_t * h_t;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::DegenerateScale(format!(
            "a(t) h(t) = {denom} at t = {scale_t}"
        )));
    }
    let times: Vec<f64> = u_points.iter().map(|&u| scale_t * u).collect();
    for &t in &times {
        if t > shots.horizon() {
            return Err(Error::Domain(format!(
                "scaled probe time {t} exceeds the realization horizon {}",
                shots.horizon()
            )));
        }
    }
    let xs = eval_x(shots, h, &times)?;
    let mut values = Vec::with_capacity(times.len());
    for (&x, &t) in xs.iter().zip(&times) {
        let c = centering(h, &triple.centering, t)?;
        values.push((x - c) / denom);
    }
    Ok(values)
}

/// Normalized path on a uniform grid of scaled times.
pub fn normalize(
    shots: &ShotTimes,
    h: &ResponseFn,
    triple: &NormalizationTriple,
    scale_t: f64,
    u_grid: &TimeGrid,
) -> Result<NormalizedPath> {
    let values = normalize_at(shots, h, triple, scale_t, u_grid.points())?;
    Ok(NormalizedPath {
        scale_t,
        u_points: u_grid.points().to_vec(),
        values,
    })
}
