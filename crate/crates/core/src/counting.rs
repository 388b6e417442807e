//! Shot-time generators: delayed/zero-delayed random walks (finite and
//! infinite variance), perturbed random walks, random walks with long
//! memory, generation-k counts of a branching random walk, and
//! inhomogeneous Poisson processes. Each model carries its exact
//! normalization `a(t)`, centering `b(t)` and limit-driver identity.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, LogNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::DriverKind;
use crate::rng::{lane_stream, stream_rng};
use crate::stats::normal_cdf;

/// Expected population cap for the branching generator.
const BRANCHING_BUDGET: f64 = 1e7;

/// Step-law catalog. Every member has closed-form mean, variance and
/// distribution function, so model constants are exact rather than
/// estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum IncrementLaw {
    /// Point mass at `value`.
    Deterministic { value: f64 },
    /// Exponential with the given rate; mean 1/rate.
    Exponential { rate: f64 },
    /// Gamma with shape k and scale theta; mean k theta.
    Gamma { shape: f64, scale: f64 },
    /// Uniform on `[lo, hi]`, `0 <= lo < hi`.
    Uniform { lo: f64, hi: f64 },
    /// Log-normal: exp(location + scale * Z).
    LogNormal { location: f64, scale: f64 },
    /// Density `2 x^{-3}` on `[1, inf)`: tail index exactly 2, infinite
    /// variance, truncated second moment `int_1^x y^2 f(y) dy = 2 ln x`.
    TailIndexTwo,
}

impl IncrementLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Deterministic { value } => value,
            Self::Exponential { rate } => 1.0 / rate,
            Self::Gamma { shape, scale } => shape * scale,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::LogNormal { location, scale } => (location + 0.5 * scale * scale).exp(),
            Self::TailIndexTwo => 2.0,
        }
    }

    /// Variance; infinite for the tail-index-2 law.
    pub fn variance(&self) -> f64 {
        match *self {
            Self::Deterministic { .. } => 0.0,
            Self::Exponential { rate } => 1.0 / (rate * rate),
            Self::Gamma { shape, scale } => shape * scale * scale,
            Self::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Self::LogNormal { location, scale } => {
                let s2 = scale * scale;
                (s2.exp() - 1.0) * (2.0 * location + s2).exp()
            }
            Self::TailIndexTwo => f64::INFINITY,
        }
    }

    /// Distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Deterministic { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    statrs::function::gamma::gamma_lr(shape, x / scale)
                }
            }
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::LogNormal { location, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal_cdf(x.ln() - location, scale)
                }
            }
            Self::TailIndexTwo => {
                if x < 1.0 {
                    0.0
                } else {
                    1.0 - 1.0 / (x * x)
                }
            }
        }
    }

    /// Points where the distribution function jumps or kinks; quadrature
    /// against the cdf splits there.
    pub fn cdf_breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::Deterministic { value } => vec![value],
            Self::Uniform { lo, hi } => vec![lo, hi],
            Self::TailIndexTwo => vec![1.0],
            _ => Vec::new(),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Self::Deterministic { value } => value,
            Self::Exponential { rate } => Exp::new(rate).unwrap().sample(rng),
            Self::Gamma { shape, scale } => Gamma::new(shape, scale).unwrap().sample(rng),
            Self::Uniform { lo, hi } => Uniform::new(lo, hi).unwrap().sample(rng),
            Self::LogNormal { location, scale } => {
                LogNormal::new(location, scale).unwrap().sample(rng)
            }
            Self::TailIndexTwo => {
                // inverse cdf: P(xi > x) = x^{-2} on [1, inf)
                let u: f64 = rng.random::<f64>();
                1.0 / (1.0 - u).sqrt()
            }
        }
    }

    /// All positive moments finite? (The tail-index-2 law only has moments
    /// of order < 2.)
    pub fn has_all_moments(&self) -> bool {
        !matches!(self, Self::TailIndexTwo)
    }

    fn validate_parameters(&self) -> Result<()> {
        let ok = match *self {
            Self::Deterministic { value } => value.is_finite() && value >= 0.0,
            Self::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Self::Gamma { shape, scale } => {
                shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
            Self::Uniform { lo, hi } => lo >= 0.0 && hi > lo && hi.is_finite(),
            Self::LogNormal { location, scale } => location.is_finite() && scale > 0.0,
            Self::TailIndexTwo => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid law parameters: {self:?}")))
        }
    }

    /// Valid as a step law: nonnegative support with positive mean.
    pub fn validate_increment(&self) -> Result<()> {
        self.validate_parameters()?;
        if let Self::Deterministic { value } = self {
            if *value <= 0.0 {
                return Err(Error::Domain(
                    "increment law must not be a point mass at 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// Valid as a delay/perturbation law: nonnegative support, point mass at
    /// zero allowed.
    pub fn validate_nonnegative(&self) -> Result<()> {
        self.validate_parameters()
    }

    /// Strictly positive support (branching steps).
    pub fn validate_strictly_positive(&self) -> Result<()> {
        self.validate_increment()?;
        if let Self::Uniform { lo, .. } = self {
            if *lo == 0.0 {
                // values arbitrarily close to 0 are fine; 0 itself has
                // probability zero under the continuous law
                return Ok(());
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Deterministic { value } => format!("deterministic({value})"),
            Self::Exponential { rate } => format!("exponential({rate})"),
            Self::Gamma { shape, scale } => format!("gamma({shape},{scale})"),
            Self::Uniform { lo, hi } => format!("uniform({lo},{hi})"),
            Self::LogNormal { location, scale } => format!("lognormal({location},{scale})"),
            Self::TailIndexTwo => "tail_index_two".into(),
        }
    }
}

/// The point mass at zero (zero delay).
pub const ZERO_DELAY: IncrementLaw = IncrementLaw::Deterministic { value: 0.0 };

/// Which model produced a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    RandomWalk,
    PerturbedWalk,
    LongMemoryWalk,
    BranchingGenK,
    InhomPoisson,
}

/// One realization of the shot times up to a horizon, stored sorted.
#[derive(Debug, Clone)]
pub struct ShotTimes {
    horizon: f64,
    times: Vec<f64>,
    tag: ModelTag,
}

impl ShotTimes {
    fn new(horizon: f64, mut times: Vec<f64>, tag: ModelTag) -> Self {
        times.sort_by(|a, b| a.partial_cmp(b).expect("NaN shot time"));
        debug_assert!(times.first().map_or(true, |&t| t >= 0.0));
        debug_assert!(times.last().map_or(true, |&t| t <= horizon));
        Self { horizon, times, tag }
    }

    /// Wrap an explicit list of shot times (sorted on construction).
    pub fn from_times(horizon: f64, times: Vec<f64>, tag: ModelTag) -> Result<Self> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::Domain(format!("invalid horizon {horizon}")));
        }
        if times.iter().any(|&t| !(0.0..=horizon).contains(&t)) {
            return Err(Error::Domain(
                "shot times must lie within [0, horizon]".into(),
            ));
        }
        Ok(Self::new(horizon, times, tag))
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn tag(&self) -> ModelTag {
        self.tag
    }

    /// Counting function `N(t)`: number of shots with `S_k <= t`, by binary
    /// search. A realization is only valid up to its horizon.
    pub fn count(&self, t: f64) -> Result<usize> {
        if t < 0.0 || t > self.horizon {
            return Err(Error::Domain(format!(
                "count evaluated at t = {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(self.times.partition_point(|&s| s <= t))
    }
}

/// Evaluable normalization function `a(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ScaleFn {
    /// a(t) = coeff * t^exponent
    Power { coeff: f64, exponent: f64 },
    /// Infinite-variance walk: a(t) = mu^{-3/2} c(t) with c solving
    /// `c^{-2} t L(c) = 1`, `L(x) = 2 ln x` (the tail-index-2 truncated
    /// second moment).
    InfiniteVarianceWalk { mu: f64 },
}

impl ScaleFn {
    pub fn eval(&self, t: f64) -> Result<f64> {
        match *self {
            Self::Power { coeff, exponent } => Ok(coeff * t.powf(exponent)),
            Self::InfiniteVarianceWalk { mu } => {
                Ok(mu.powf(-1.5) * infinite_variance_scale(t)?)
            }
        }
    }

    /// Regular-variation index of `a`.
    pub fn index(&self) -> f64 {
        match *self {
            Self::Power { exponent, .. } => exponent,
            Self::InfiniteVarianceWalk { .. } => 0.5,
        }
    }
}

/// Solve `c^{-2} t L(c) = 1` with `L(x) = 2 ln x` by bisection on the
/// monotone branch `c > sqrt(e)`. A solution on that branch requires
/// `t >= e`; the scale is only meaningful for large t anyway.
fn infinite_variance_scale(t: f64) -> Result<f64> {
    if !(t >= 3.0) {
        return Err(Error::Domain(format!(
            "infinite-variance scale c(t) is defined for t >= 3, got {t}"
        )));
    }
    let g = |c: f64| 2.0 * t * c.ln() / (c * c);
    let mut lo = std::f64::consts::E.sqrt() * (1.0 + 1e-9);
    if g(lo) < 1.0 {
        return Err(Error::Numerical(format!(
            "no solution of c^-2 t L(c) = 1 on the monotone branch at t = {t}"
        )));
    }
    let mut hi = lo * 2.0;
    while g(hi) > 1.0 {
        hi *= 2.0;
        if hi > 1e160 {
            return Err(Error::Numerical("bisection bracket for c(t) blew up".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Centering measure descriptor: a nondecreasing `b` with evaluable values
/// and density. All catalog centerings satisfy `b(0) = 0` (no atom at the
/// origin).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Centering {
    /// b(t) = slope * t
    Linear { slope: f64 },
    /// b(t) = coeff * t^exponent, exponent >= 1 or handled by substitution
    PowerLaw { coeff: f64, exponent: f64 },
    /// b(t) = scale * int_0^t F(y) dy for the given law's cdf F
    IntegratedCdf { law: IncrementLaw, scale: f64 },
}

impl Centering {
    pub fn eval(&self, t: f64) -> Result<f64> {
        debug_assert!(t >= 0.0);
        match self {
            Self::Linear { slope } => Ok(slope * t),
            Self::PowerLaw { coeff, exponent } => Ok(coeff * t.powf(*exponent)),
            Self::IntegratedCdf { law, scale } => {
                if t == 0.0 {
                    return Ok(0.0);
                }
                let v = crate::quad::integrate_split(
                    |y| law.cdf(y),
                    0.0,
                    t,
                    &law.cdf_breakpoints(),
                    1e-10 * (1.0 + t),
                )?;
                Ok(scale * v)
            }
        }
    }

    /// Density `b'(y)` for `y > 0`.
    pub fn density(&self, y: f64) -> f64 {
        debug_assert!(y > 0.0);
        match self {
            Self::Linear { slope } => *slope,
            Self::PowerLaw { coeff, exponent } => coeff * exponent * y.powf(exponent - 1.0),
            Self::IntegratedCdf { law, scale } => scale * law.cdf(y),
        }
    }

    /// Exponent of the leading power of the density at 0 (0 for bounded
    /// densities). Quadrature uses it to regularize `y^{e-1}`-type
    /// singularities.
    pub fn density_power_at_zero(&self) -> f64 {
        match self {
            Self::PowerLaw { exponent, .. } => exponent - 1.0,
            _ => 0.0,
        }
    }

    /// Interior points where the density kinks or jumps.
    pub fn density_breakpoints(&self) -> Vec<f64> {
        match self {
            Self::IntegratedCdf { law, .. } => law.cdf_breakpoints(),
            _ => Vec::new(),
        }
    }
}

/// The exact `(a, b, driver)` triple of a model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizationTriple {
    pub scale: ScaleFn,
    pub centering: Centering,
    pub driver: DriverKind,
}

/// Model selection with parameters; derived constants come from the law
/// catalog in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `S_k = S_0 + xi_1 + ... + xi_k`; zero-delayed when the delay is a
    /// point mass at 0.
    RandomWalk {
        increment: IncrementLaw,
        #[serde(default = "zero_delay")]
        delay: IncrementLaw,
    },
    /// `S_n = xi_1 + ... + xi_{n-1} + eta_n`.
    PerturbedWalk {
        increment: IncrementLaw,
        perturbation: IncrementLaw,
    },
    /// `S_n - S_{n-1} = xi_n exp(theta_n)` with stationary long-memory
    /// Gaussian `theta`.
    LongMemoryWalk { increment: IncrementLaw, memory: f64 },
    /// Generation-k positions of a branching random walk whose displacement
    /// law is a strict renewal process.
    BranchingGenK { increment: IncrementLaw, generation: u32 },
    /// Inhomogeneous Poisson process with mean function `m(t) = c t^w`.
    InhomPoisson { coeff: f64, exponent: f64 },
}

fn zero_delay() -> IncrementLaw {
    ZERO_DELAY
}

impl ModelSpec {
    pub fn tag(&self) -> ModelTag {
        match self {
            Self::RandomWalk { .. } => ModelTag::RandomWalk,
            Self::PerturbedWalk { .. } => ModelTag::PerturbedWalk,
            Self::LongMemoryWalk { .. } => ModelTag::LongMemoryWalk,
            Self::BranchingGenK { .. } => ModelTag::BranchingGenK,
            Self::InhomPoisson { .. } => ModelTag::InhomPoisson,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::RandomWalk { increment, delay } => {
                format!("random_walk(xi={}, delay={})", increment.label(), delay.label())
            }
            Self::PerturbedWalk { increment, perturbation } => format!(
                "perturbed_walk(xi={}, eta={})",
                increment.label(),
                perturbation.label()
            ),
            Self::LongMemoryWalk { increment, memory } => {
                format!("long_memory_walk(xi={}, d={memory})", increment.label())
            }
            Self::BranchingGenK { increment, generation } => {
                format!("branching_gen_k(xi={}, k={generation})", increment.label())
            }
            Self::InhomPoisson { coeff, exponent } => {
                format!("inhom_poisson(c={coeff}, w={exponent})")
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::RandomWalk { increment, delay } => {
                increment.validate_increment()?;
                delay.validate_nonnegative()
            }
            Self::PerturbedWalk { increment, perturbation } => {
                increment.validate_increment()?;
                perturbation.validate_nonnegative()?;
                if !increment.variance().is_finite() || increment.variance() == 0.0 {
                    return Err(Error::UnsupportedModel(
                        "perturbed walk requires a step law with finite positive variance"
                            .into(),
                    ));
                }
                Ok(())
            }
            Self::LongMemoryWalk { increment, memory } => {
                increment.validate_increment()?;
                if !(*memory > 0.0 && *memory < 0.5) {
                    return Err(Error::Domain(format!(
                        "long-memory walk: memory parameter must lie in (0, 1/2), got {memory}"
                    )));
                }
                Ok(())
            }
            Self::BranchingGenK { increment, generation } => {
                increment.validate_strictly_positive()?;
                if *generation < 2 {
                    return Err(Error::Domain(format!(
                        "branching model requires generation k >= 2, got {generation}"
                    )));
                }
                let var = increment.variance();
                if !var.is_finite() || var == 0.0 {
                    return Err(Error::UnsupportedModel(
                        "branching model requires a step law with finite positive variance"
                            .into(),
                    ));
                }
                Ok(())
            }
            Self::InhomPoisson { coeff, exponent } => {
                if !(*coeff > 0.0 && *exponent > 0.0) {
                    return Err(Error::Domain(format!(
                        "inhomogeneous Poisson requires c, w > 0, got c={coeff}, w={exponent}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// The exact normalization/centering/driver triple.
    pub fn normalization(&self) -> Result<NormalizationTriple> {
        self.validate()?;
        match self {
            Self::RandomWalk { increment, .. } => {
                let mu = increment.mean();
                let var = increment.variance();
                if var == 0.0 {
                    return Err(Error::DegenerateScale(
                        "deterministic walk has zero variance, the Gaussian normalization \
                         degenerates"
                            .into(),
                    ));
                }
                let scale = if var.is_finite() {
                    ScaleFn::Power {
                        coeff: (var * mu.powi(-3)).sqrt(),
                        exponent: 0.5,
                    }
                } else {
                    if !matches!(increment, IncrementLaw::TailIndexTwo) {
                        return Err(Error::UnsupportedModel(
                            "infinite variance is supported only for the tail-index-2 law"
                                .into(),
                        ));
                    }
                    ScaleFn::InfiniteVarianceWalk { mu }
                };
                Ok(NormalizationTriple {
                    scale,
                    centering: Centering::Linear { slope: 1.0 / mu },
                    driver: DriverKind::Bm,
                })
            }
            Self::PerturbedWalk { increment, perturbation } => {
                let mu = increment.mean();
                let var = increment.variance();
                Ok(NormalizationTriple {
                    scale: ScaleFn::Power {
                        coeff: (var * mu.powi(-3)).sqrt(),
                        exponent: 0.5,
                    },
                    centering: Centering::IntegratedCdf {
                        law: *perturbation,
                        scale: 1.0 / mu,
                    },
                    driver: DriverKind::Bm,
                })
            }
            Self::LongMemoryWalk { increment, memory } => {
                let d = *memory;
                if !increment.variance().is_finite() {
                    return Err(Error::UnsupportedModel(
                        "long-memory walk with an infinite-variance step law is not in the \
                         supported catalog"
                            .into(),
                    ));
                }
                // theta is standard normal marginally: E e^theta = e^{1/2}
                // and E theta e^theta = e^{1/2}.
                let root_e = std::f64::consts::E.sqrt();
                let m1 = increment.mean() * root_e;
                let m2 = increment.mean() * root_e;
                let hurst = d + 0.5;
                // ell is the constant H(2H-1) = d(2d+1) of the noise tail.
                let ell = d * (2.0 * d + 1.0);
                let coeff = (d * (2.0 * d + 1.0)).powf(-0.5)
                    * m1.powf(-1.5 - d)
                    * m2
                    * ell.sqrt();
                Ok(NormalizationTriple {
                    scale: ScaleFn::Power { coeff, exponent: hurst },
                    centering: Centering::Linear { slope: 1.0 / m1 },
                    driver: DriverKind::Fbm { hurst },
                })
            }
            Self::BranchingGenK { increment, generation } => {
                let k = *generation;
                let mu = increment.mean();
                let var = increment.variance();
                let kf = k as f64;
                let fact_km1 = factorial(k - 1);
                let coeff = (var * mu.powi(-(2 * k as i32) - 1)).sqrt() / fact_km1;
                Ok(NormalizationTriple {
                    scale: ScaleFn::Power { coeff, exponent: kf - 0.5 },
                    centering: Centering::PowerLaw {
                        coeff: 1.0 / (factorial(k) * mu.powi(k as i32)),
                        exponent: kf,
                    },
                    driver: DriverKind::Rl { rho: kf - 1.0 },
                })
            }
            Self::InhomPoisson { coeff, exponent } => Ok(NormalizationTriple {
                scale: ScaleFn::Power {
                    coeff: coeff.sqrt(),
                    exponent: 0.5 * exponent,
                },
                centering: Centering::PowerLaw {
                    coeff: *coeff,
                    exponent: *exponent,
                },
                driver: DriverKind::TimeChangedBm { exponent: *exponent },
            }),
        }
    }

    /// Generate one realization up to `horizon`; `(seed, path_index)` fully
    /// determine the output.
    pub fn generate(&self, horizon: f64, seed: u64, path_index: u64) -> Result<ShotTimes> {
        self.validate()?;
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::Domain(format!(
                "generation horizon must be nonnegative and finite, got {horizon}"
            )));
        }
        match self {
            Self::RandomWalk { increment, delay } => {
                let mut rng = stream_rng(seed, lane_stream(path_index, 0, 0));
                Ok(ShotTimes::new(
                    horizon,
                    random_walk_times(increment, delay, horizon, &mut rng),
                    ModelTag::RandomWalk,
                ))
            }
            Self::PerturbedWalk { increment, perturbation } => {
                let mut rng = stream_rng(seed, lane_stream(path_index, 0, 0));
                let mut times = Vec::new();
                let mut partial = 0.0; // xi_1 + ... + xi_{n-1}
                loop {
                    let s = partial + perturbation.sample(&mut rng);
                    if s <= horizon {
                        times.push(s);
                    }
                    partial += increment.sample(&mut rng);
                    // eta >= 0, so no later shot can undercut the partial sum
                    if partial > horizon {
                        break;
                    }
                }
                Ok(ShotTimes::new(horizon, times, ModelTag::PerturbedWalk))
            }
            Self::LongMemoryWalk { increment, memory } => {
                long_memory_times(increment, *memory, horizon, seed, path_index)
            }
            Self::BranchingGenK { increment, generation } => {
                branching_times(increment, *generation, horizon, seed, path_index)
            }
            Self::InhomPoisson { coeff, exponent } => {
                let mut rng = stream_rng(seed, lane_stream(path_index, 0, 0));
                let m_horizon = coeff * horizon.powf(*exponent);
                let exp1 = Exp::new(1.0).unwrap();
                let mut times = Vec::new();
                let mut s = 0.0;
                loop {
                    s += exp1.sample(&mut rng);
                    if s > m_horizon {
                        break;
                    }
                    // map the unit-rate arrival through the inverse mean
                    // function m^{-1}(s) = (s/c)^{1/w}
                    times.push((s / coeff).powf(1.0 / exponent));
                }
                Ok(ShotTimes::new(horizon, times, ModelTag::InhomPoisson))
            }
        }
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

fn random_walk_times(
    increment: &IncrementLaw,
    delay: &IncrementLaw,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mut times = Vec::new();
    let mut s = delay.sample(rng);
    while s <= horizon {
        times.push(s);
        s += increment.sample(rng);
    }
    times
}

/// Long-memory walk: draws the noise sequence in one block; if the walk has
/// not crossed the horizon when the block is exhausted, the whole path is
/// regenerated from a fresh deterministic stream with twice the length.
fn long_memory_times(
    increment: &IncrementLaw,
    d: f64,
    horizon: f64,
    seed: u64,
    path_index: u64,
) -> Result<ShotTimes> {
    let root_e = std::f64::consts::E.sqrt();
    let m1 = increment.mean() * root_e;
    let mut n_est = ((1.5 * horizon / m1).ceil() as usize).max(64);
    for attempt in 0..8u8 {
        let theta = crate::gauss::sample_fgn_sequence(
            d,
            n_est,
            seed,
            lane_stream(path_index, 1, attempt),
        )?;
        let mut rng = stream_rng(seed, lane_stream(path_index, 0, attempt));
        match long_memory_accumulate(increment, &theta, horizon, &mut rng) {
            Some(times) => return Ok(ShotTimes::new(horizon, times, ModelTag::LongMemoryWalk)),
            None => n_est *= 2,
        }
    }
    Err(Error::Budget(format!(
        "long-memory walk did not cross horizon {horizon} within {n_est} steps"
    )))
}

/// Core accumulation with an injected noise sequence; returns None when the
/// noise is exhausted before the walk crosses the horizon. Exposed to tests
/// so degenerate noise can be injected.
pub(crate) fn long_memory_accumulate(
    increment: &IncrementLaw,
    theta: &[f64],
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<f64>> {
    // S_0 = 0 is itself a shot
    let mut times = vec![0.0];
    let mut s = 0.0;
    for &th in theta {
        s += increment.sample(rng) * th.exp();
        if s > horizon {
            return Some(times);
        }
        times.push(s);
    }
    None
}

/// Long-memory walk with an externally supplied noise sequence (testing
/// hook for degenerate noise).
pub fn gen_long_memory_walk_with_noise(
    increment: &IncrementLaw,
    theta: &[f64],
    horizon: f64,
    seed: u64,
    path_index: u64,
) -> Result<ShotTimes> {
    increment.validate_increment()?;
    let mut rng = stream_rng(seed, lane_stream(path_index, 0, 0));
    match long_memory_accumulate(increment, theta, horizon, &mut rng) {
        Some(times) => Ok(ShotTimes::new(horizon, times, ModelTag::LongMemoryWalk)),
        None => Err(Error::Budget(
            "supplied noise sequence exhausted before the horizon".into(),
        )),
    }
}

fn branching_times(
    increment: &IncrementLaw,
    k: u32,
    horizon: f64,
    seed: u64,
    path_index: u64,
) -> Result<ShotTimes> {
    let mu = increment.mean();
    let expected = horizon.powf(k as f64) / (factorial(k) * mu.powi(k as i32));
    if expected > BRANCHING_BUDGET {
        return Err(Error::Budget(format!(
            "expected generation-{k} population {expected:.3e} exceeds the {BRANCHING_BUDGET:.0e} budget"
        )));
    }
    let mut rng = stream_rng(seed, lane_stream(path_index, 0, 0));
    // Strict renewal points of one individual's offspring, truncated at the
    // horizon. Positions are sums of strictly positive steps, so nothing
    // beyond the horizon can have descendants inside it.
    let renewal = |from: f64, rng: &mut ChaCha8Rng, out: &mut Vec<f64>| {
        let mut s = from;
        loop {
            s += increment.sample(rng);
            if s > horizon {
                break;
            }
            out.push(s);
        }
    };
    let mut current = Vec::new();
    renewal(0.0, &mut rng, &mut current);
    for _ in 1..k {
        let mut next = Vec::new();
        for &p in &current {
            renewal(p, &mut rng, &mut next);
        }
        current = next;
    }
    Ok(ShotTimes::new(horizon, current, ModelTag::BranchingGenK))
}
