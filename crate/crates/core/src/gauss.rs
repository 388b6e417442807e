//! Exact-covariance synthesis of the Gaussian driver processes: Brownian
//! motion, fractional Brownian motion, the Riemann–Liouville process and
//! time-changed Brownian motion, plus the stationary fractional Gaussian
//! noise sequence feeding the long-memory walk.
//!
//! The reference sampler factorizes the covariance matrix on the nonzero
//! grid points and multiplies a standard normal vector; fast paths
//! (increment cumsum for the independent-increment drivers, circulant
//! embedding for long fractional noise) are exact in law and validated
//! against the reference in the test suite.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad;
use crate::rng::stream_rng;

/// Absolute diagonal jitter ladder tried before a covariance matrix is
/// declared numerically non-PSD.
const JITTER_LADDER: [f64; 5] = [0.0, 1e-13, 1e-12, 1e-11, 1e-10];

/// Exact factorization serves `sample_fgn_sequence` up to this length;
/// beyond it the circulant embedding fast path takes over.
pub const FGN_EXACT_MAX_LEN: usize = 4096;

/// Inside a path sampler, fractional noise switches to circulant embedding
/// at this length (engineering threshold; both methods are exact in law).
const PATH_FGN_CIRCULANT_MIN: usize = 1024;

/// Covariance of standard Brownian motion, `min(u, v)`.
pub fn bm_cov(u: f64, v: f64) -> Result<f64> {
    check_nonneg_times(u, v)?;
    Ok(u.min(v))
}

/// Covariance of fractional Brownian motion with Hurst index `h`:
/// `(u^{2H} + v^{2H} - |u-v|^{2H}) / 2`.
pub fn fbm_cov(h: f64, u: f64, v: f64) -> Result<f64> {
    check_hurst(h)?;
    check_nonneg_times(u, v)?;
    Ok(fbm_cov_unchecked(h, u, v))
}

fn check_hurst(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Domain(format!(
            "fbm covariance: Hurst index must lie in (0, 1), got {h}"
        )));
    }
    Ok(())
}

fn fbm_cov_unchecked(h: f64, u: f64, v: f64) -> f64 {
    let two_h = 2.0 * h;
    0.5 * (u.powf(two_h) + v.powf(two_h) - (u - v).abs().powf(two_h))
}

/// Covariance of the Riemann–Liouville process with exponent `rho`:
/// `int_0^{min(u,v)} (u-y)^rho (v-y)^rho dy`.
///
/// On the diagonal the closed form `u^{2 rho + 1} / (2 rho + 1)` is used;
/// off the diagonal the integral is evaluated adaptively to 1e-10. For
/// `rho < 0` the integrable endpoint singularity at `y = min(u, v)` is
/// removed by the substitution `y = min - s^{1/(rho+1)}`, under which the
/// singular factor and the Jacobian cancel exactly.
pub fn rl_cov(rho: f64, u: f64, v: f64) -> Result<f64> {
    if !(rho > -0.5) {
        return Err(Error::Domain(format!(
            "rl covariance: exponent must exceed -1/2, got {rho}"
        )));
    }
    check_nonneg_times(u, v)?;
    rl_cov_unchecked(rho, u, v)
}

fn rl_cov_unchecked(rho: f64, u: f64, v: f64) -> Result<f64> {
    let m = u.min(v);
    if m == 0.0 {
        return Ok(0.0);
    }
    if u == v {
        return Ok(u.powf(2.0 * rho + 1.0) / (2.0 * rho + 1.0));
    }
    let big = u.max(v);
    if rho >= 0.0 {
        quad::integrate(|y| (m - y).powf(rho) * (big - y).powf(rho), 0.0, m, 1e-10)
    } else {
        // y = m - s^{1/q}, q = rho + 1: the factor (m-y)^rho s^{1/q - 1}/q
        // collapses to 1/q, leaving a bounded integrand.
        let q = rho + 1.0;
        quad::integrate(
            |s| (big - m + s.powf(1.0 / q)).powf(rho) / q,
            0.0,
            m.powf(q),
            1e-10,
        )
    }
}

/// Covariance of time-changed Brownian motion `B(t^w)`: `min(u, v)^w`.
pub fn timechanged_cov(w: f64, u: f64, v: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::Domain(format!(
            "time-changed covariance: exponent must be positive, got {w}"
        )));
    }
    check_nonneg_times(u, v)?;
    Ok(u.min(v).powf(w))
}

fn check_nonneg_times(u: f64, v: f64) -> Result<()> {
    if u < 0.0 || v < 0.0 || !u.is_finite() || !v.is_finite() {
        return Err(Error::Domain(format!(
            "covariance arguments must be nonnegative times, got ({u}, {v})"
        )));
    }
    Ok(())
}

/// The four Gaussian limit drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriverKind {
    Bm,
    Fbm { hurst: f64 },
    Rl { rho: f64 },
    TimeChangedBm { exponent: f64 },
}

impl DriverKind {
    pub fn fbm(hurst: f64) -> Result<Self> {
        check_hurst(hurst)?;
        Ok(Self::Fbm { hurst })
    }

    pub fn rl(rho: f64) -> Result<Self> {
        if !(rho > -0.5) {
            return Err(Error::Domain(format!(
                "rl driver: exponent must exceed -1/2, got {rho}"
            )));
        }
        Ok(Self::Rl { rho })
    }

    pub fn time_changed_bm(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0) {
            return Err(Error::Domain(format!(
                "time-changed driver: exponent must be positive, got {exponent}"
            )));
        }
        Ok(Self::TimeChangedBm { exponent })
    }

    /// Covariance function; parameters are validated at construction and
    /// arguments are expected to be nonnegative.
    pub fn cov(&self, u: f64, v: f64) -> f64 {
        match *self {
            Self::Bm => u.min(v),
            Self::Fbm { hurst } => fbm_cov_unchecked(hurst, u, v),
            Self::Rl { rho } => rl_cov_unchecked(rho, u, v)
                .expect("RL covariance quadrature failed on validated parameters"),
            Self::TimeChangedBm { exponent } => u.min(v).powf(exponent),
        }
    }

    /// Nominal local Hölder exponent of the driver's paths.
    pub fn holder_index(&self) -> f64 {
        match *self {
            Self::Bm => 0.5,
            Self::Fbm { hurst } => hurst,
            Self::Rl { rho } => (0.5 + rho).min(1.0),
            Self::TimeChangedBm { exponent } => 0.5 * exponent.min(1.0),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Bm => "bm".into(),
            Self::Fbm { hurst } => format!("fbm(H={hurst})"),
            Self::Rl { rho } => format!("rl(rho={rho})"),
            Self::TimeChangedBm { exponent } => format!("time_changed_bm(w={exponent})"),
        }
    }
}

/// What a sampled or transformed path realizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PathKind {
    Driver(DriverKind),
    /// Result of an operator applied to a driver path; carries a nominal
    /// Hölder exponent so further operators can validate against it.
    Transformed { label: String, alpha: f64 },
}

impl PathKind {
    pub fn holder_index(&self) -> f64 {
        match self {
            Self::Driver(kind) => kind.holder_index(),
            Self::Transformed { alpha, .. } => *alpha,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Driver(kind) => kind.label(),
            Self::Transformed { label, .. } => label.clone(),
        }
    }
}

/// One realization of a Gaussian process on a time grid; the value at t = 0
/// is exactly zero for every driver.
#[derive(Debug, Clone)]
pub struct GaussianPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub kind: PathKind,
}

impl GaussianPath {
    pub fn holder_index(&self) -> f64 {
        self.kind.holder_index()
    }
}

/// Symmetric covariance matrix stored as a packed lower triangle.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    n: usize,
    lower: Vec<f64>,
}

impl CovarianceMatrix {
    /// Build from a covariance function on the given points. Symmetry holds
    /// by construction; positive semidefiniteness is established by the
    /// factorization.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(points: &[f64], cov: F) -> Self {
        let n = points.len();
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                lower.push(cov(points[i], points[j]));
            }
        }
        Self { n, lower }
    }

    fn from_toeplitz(first_column: &[f64]) -> Self {
        let n = first_column.len();
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                lower.push(first_column[i - j]);
            }
        }
        Self { n, lower }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.lower[i * (i + 1) / 2 + j]
    }

    /// Lower-triangular square root, retrying with diagonal jitter up to
    /// 1e-10 before reporting the matrix non-PSD. `context` names the
    /// offending driver/grid in the error.
    pub fn cholesky(&self, context: &str) -> Result<CholeskyFactor> {
        for &jitter in &JITTER_LADDER {
            let mut work = self.lower.clone();
            if jitter > 0.0 {
                for i in 0..self.n {
                    work[i * (i + 1) / 2 + i] += jitter;
                }
            }
            if cholesky_in_place(&mut work, self.n) {
                return Ok(CholeskyFactor { n: self.n, lower: work });
            }
        }
        Err(Error::Numerical(format!(
            "covariance factorization failed for {context} ({} points) after diagonal jitter up to 1e-10",
            self.n
        )))
    }
}

/// In-place packed Cholesky; returns false on a nonpositive pivot.
fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        let row_i = i * (i + 1) / 2;
        for j in 0..=i {
            let row_j = j * (j + 1) / 2;
            let mut sum = a[row_i + j];
            for k in 0..j {
                sum -= a[row_i + k] * a[row_j + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return false;
                }
                a[row_i + j] = sum.sqrt();
            } else {
                a[row_i + j] = sum / a[row_j + j];
            }
        }
    }
    true
}

/// Lower-triangular factor L with C = L L^T.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    lower: Vec<f64>,
}

impl CholeskyFactor {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.n);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let row = i * (i + 1) / 2;
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.lower[row + j] * z[j];
            }
            out[i] = acc;
        }
        out
    }
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k` for
/// Hurst index `h`: `gamma(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2`.
fn fgn_gamma(h: f64, k: usize) -> f64 {
    let two_h = 2.0 * h;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

fn check_memory(d: f64) -> Result<()> {
    if !(d > 0.0 && d < 0.5) {
        return Err(Error::Domain(format!(
            "fractional noise: memory parameter must lie in (0, 1/2), got {d}"
        )));
    }
    Ok(())
}

/// Autocovariance of the long-memory noise sequence with parameter
/// `d in (0, 1/2)`, i.e. unit-variance fractional Gaussian noise with
/// `H = d + 1/2`. This is the concrete stationary family with
/// `E th_1 th_{k+1} ~ H(2H-1) k^{2d-1}`: the required power tail with a
/// constant slowly varying part.
pub fn fgn_autocov(d: f64, k: usize) -> Result<f64> {
    check_memory(d)?;
    Ok(fgn_gamma(d + 0.5, k))
}

enum FgnMethod {
    Cholesky(CholeskyFactor),
    Circulant {
        /// Per-frequency amplitudes of the embedding, pre-scaled for the
        /// sampling recipe; the fft operates on length-2n buffers.
        weights: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
}

/// Sampler for stationary unit-variance fractional Gaussian noise of fixed
/// length. Construction precomputes the factorization, so one sampler can
/// serve many Monte Carlo draws.
pub struct FgnSampler {
    hurst: f64,
    n: usize,
    method: FgnMethod,
}

impl FgnSampler {
    /// Sampler for the long-memory model's noise, `d in (0, 1/2)`. Exact
    /// Cholesky factorization up to [`FGN_EXACT_MAX_LEN`], circulant
    /// embedding beyond.
    pub fn new(d: f64, n: usize) -> Result<Self> {
        check_memory(d)?;
        if n <= FGN_EXACT_MAX_LEN {
            Self::cholesky_for_hurst(d + 0.5, n)
        } else {
            Self::circulant_for_hurst(d + 0.5, n)
        }
    }

    /// Exact covariance factorization (the reference sampler).
    pub fn new_cholesky(d: f64, n: usize) -> Result<Self> {
        check_memory(d)?;
        Self::cholesky_for_hurst(d + 0.5, n)
    }

    /// Circulant embedding (Davies–Harte) fast path, exact in law when the
    /// embedding eigenvalues are nonnegative, which holds for this family.
    pub fn new_circulant(d: f64, n: usize) -> Result<Self> {
        check_memory(d)?;
        Self::circulant_for_hurst(d + 0.5, n)
    }

    fn for_hurst(hurst: f64, n: usize) -> Result<Self> {
        if n >= PATH_FGN_CIRCULANT_MIN {
            Self::circulant_for_hurst(hurst, n)
        } else {
            Self::cholesky_for_hurst(hurst, n)
        }
    }

    fn cholesky_for_hurst(hurst: f64, n: usize) -> Result<Self> {
        check_hurst(hurst)?;
        if n == 0 {
            return Err(Error::Domain("fractional noise: length must be >= 1".into()));
        }
        let gammas: Vec<f64> = (0..n).map(|k| fgn_gamma(hurst, k)).collect();
        let cov = CovarianceMatrix::from_toeplitz(&gammas);
        let factor = cov.cholesky(&format!("fgn(H={hurst})"))?;
        Ok(Self { hurst, n, method: FgnMethod::Cholesky(factor) })
    }

    fn circulant_for_hurst(hurst: f64, n: usize) -> Result<Self> {
        check_hurst(hurst)?;
        if n < 2 {
            return Err(Error::Domain(
                "fractional noise: circulant embedding needs length >= 2".into(),
            ));
        }
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
        for k in 0..n {
            row.push(Complex::new(fgn_gamma(hurst, k), 0.0));
        }
        row.push(Complex::new(0.0, 0.0));
        for k in (1..n).rev() {
            row.push(Complex::new(fgn_gamma(hurst, k), 0.0));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);
        let max_eig = row.iter().map(|c| c.re).fold(0.0f64, f64::max);
        let mut eigs = Vec::with_capacity(m);
        for c in &row {
            if c.re < -1e-9 * max_eig {
                return Err(Error::Numerical(format!(
                    "circulant embedding for fgn(H={hurst}, n={n}) has negative eigenvalue {:.3e}",
                    c.re
                )));
            }
            eigs.push(c.re.max(0.0));
        }
        let mf = m as f64;
        let mut weights = vec![0.0; m];
        weights[0] = (eigs[0] / mf).sqrt();
        weights[n] = (eigs[n] / mf).sqrt();
        for j in 1..n {
            weights[j] = (eigs[j] / (2.0 * mf)).sqrt();
            weights[m - j] = (eigs[m - j] / (2.0 * mf)).sqrt();
        }
        Ok(Self { hurst, n, method: FgnMethod::Circulant { weights, fft } })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sample_with(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match &self.method {
            FgnMethod::Cholesky(factor) => {
                let z: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
                factor.mul_vec(&z)
            }
            FgnMethod::Circulant { weights, fft } => {
                let n = self.n;
                let m = 2 * n;
                let mut w = vec![Complex::new(0.0, 0.0); m];
                w[0] = Complex::new(weights[0] * rng.sample::<f64, _>(StandardNormal), 0.0);
                for j in 1..n {
                    let g1: f64 = rng.sample(StandardNormal);
                    let g2: f64 = rng.sample(StandardNormal);
                    w[j] = Complex::new(weights[j] * g1, weights[j] * g2);
                    w[m - j] = w[j].conj();
                }
                w[n] = Complex::new(weights[n] * rng.sample::<f64, _>(StandardNormal), 0.0);
                fft.process(&mut w);
                w.truncate(n);
                w.into_iter().map(|c| c.re).collect()
            }
        }
    }

    pub fn sample(&self, seed: u64, stream: u64) -> Vec<f64> {
        self.sample_with(&mut stream_rng(seed, stream))
    }
}

/// One draw of the stationary long-memory noise sequence; `seed` and
/// `stream` fully determine the output.
pub fn sample_fgn_sequence(d: f64, n: usize, seed: u64, stream: u64) -> Result<Vec<f64>> {
    Ok(FgnSampler::new(d, n)?.sample(seed, stream))
}

enum SampleMethod {
    /// Independent increments with the given standard deviations, summed.
    IncrementCumsum { std_devs: Vec<f64> },
    /// Fractional noise scaled by step^H, summed.
    FgnCumsum { fgn: FgnSampler, scale: f64 },
    /// Generic exact sampler: factorized covariance on the nonzero points.
    Factorized { factor: CholeskyFactor },
}

/// Reusable sampler for driver paths on a fixed grid. Construction performs
/// the covariance factorization once; `sample` is cheap and thread-safe.
pub struct PathSampler {
    kind: DriverKind,
    grid: TimeGrid,
    method: SampleMethod,
}

impl PathSampler {
    pub fn new(kind: DriverKind, grid: &TimeGrid) -> Result<Self> {
        let points = grid.points();
        let n_inc = points.len() - 1;
        let method = match kind {
            DriverKind::Bm => SampleMethod::IncrementCumsum {
                std_devs: points.windows(2).map(|w| (w[1] - w[0]).sqrt()).collect(),
            },
            DriverKind::TimeChangedBm { exponent } => SampleMethod::IncrementCumsum {
                std_devs: points
                    .windows(2)
                    .map(|w| (w[1].powf(exponent) - w[0].powf(exponent)).sqrt())
                    .collect(),
            },
            DriverKind::Fbm { hurst } => SampleMethod::FgnCumsum {
                fgn: FgnSampler::for_hurst(hurst, n_inc)?,
                scale: grid.step().powf(hurst),
            },
            DriverKind::Rl { .. } => Self::factorized(kind, grid)?,
        };
        Ok(Self { kind, grid: grid.clone(), method })
    }

    /// Exact covariance factorization regardless of kind (the reference).
    pub fn exact(kind: DriverKind, grid: &TimeGrid) -> Result<Self> {
        let method = Self::factorized(kind, grid)?;
        Ok(Self { kind, grid: grid.clone(), method })
    }

    fn factorized(kind: DriverKind, grid: &TimeGrid) -> Result<SampleMethod> {
        let nonzero = &grid.points()[1..];
        let cov = CovarianceMatrix::from_fn(nonzero, |u, v| kind.cov(u, v));
        let factor = cov.cholesky(&kind.label())?;
        Ok(SampleMethod::Factorized { factor })
    }

    pub fn kind(&self) -> DriverKind {
        self.kind
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn sample(&self, seed: u64, path_index: u64) -> GaussianPath {
        let mut rng = stream_rng(seed, path_index);
        let n = self.grid.len();
        let mut values = Vec::with_capacity(n);
        values.push(0.0);
        match &self.method {
            SampleMethod::IncrementCumsum { std_devs } => {
                let mut acc = 0.0;
                for sd in std_devs {
                    acc += sd * rng.sample::<f64, _>(StandardNormal);
                    values.push(acc);
                }
            }
            SampleMethod::FgnCumsum { fgn, scale } => {
                let noise = fgn.sample_with(&mut rng);
                let mut acc = 0.0;
                for x in noise {
                    acc += scale * x;
                    values.push(acc);
                }
            }
            SampleMethod::Factorized { factor } => {
                let z: Vec<f64> = (0..n - 1).map(|_| rng.sample(StandardNormal)).collect();
                values.extend(factor.mul_vec(&z));
            }
        }
        GaussianPath { grid: self.grid.clone(), values, kind: PathKind::Driver(self.kind) }
    }
}

/// One exact sample of the given driver on the grid; the value at t = 0 is
/// exactly zero. `seed` and `path_index` fully determine the path.
pub fn sample_path(
    kind: DriverKind,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> Result<GaussianPath> {
    Ok(PathSampler::new(kind, grid)?.sample(seed, path_index))
}
