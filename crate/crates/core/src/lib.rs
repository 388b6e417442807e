//! Simulation and Monte Carlo verification toolkit for general shot noise
//! processes.
//!
//! A shot noise process applies a response function `h` to the age of every
//! event of a counting process: `X(t) = sum_k h(t - S_k) 1{S_k <= t}`. When
//! the normalized counting process converges to a Gaussian driver and `h` is
//! regularly varying of index `beta`, the normalized shot noise converges to
//! a fractional integral of the driver. This crate provides:
//!
//! * [`gauss`] — exact sampling of the Gaussian drivers (Brownian motion,
//!   fractional Brownian motion, Riemann–Liouville, time-changed Brownian
//!   motion) and of stationary fractional Gaussian noise;
//! * [`counting`] — five shot-time models, each bundled with its
//!   normalization, centering and limit-driver identity;
//! * [`response`] — the regularly varying response catalog with assumption
//!   checks;
//! * [`shotnoise`] — evaluation of `X`, the centering integral and the fully
//!   normalized process;
//! * [`fracint`] — fractional integration operators, the limit-covariance
//!   oracle, a convolution identity check and a path-regularity estimator;
//! * [`verify`] — the Monte Carlo covariance/marginal verification harness.
//!
//! Everything is deterministic given a seed: each simulated path consumes an
//! RNG stream keyed by its index, and batch reductions run in index order,
//! so results are identical for any worker count.

pub mod counting;
pub mod error;
pub mod fracint;
pub mod gauss;
pub mod grid;
pub mod par;
pub mod quad;
pub mod response;
pub mod rng;
pub mod shotnoise;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use grid::TimeGrid;
