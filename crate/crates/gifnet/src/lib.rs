//! Simulator and analysis library for conductance-based integrate-and-fire
//! networks with noise.
//!
//! Spike trains are binary rasters at unit time resolution. Conditionally on
//! the spike history, membrane potentials are Gaussian with computable mean
//! and variance, so the spiking pattern at each step follows an exact
//! product-Bernoulli law. This crate evaluates that law (and the Gibbs
//! potential it defines), samples rasters from it, truncates its memory to a
//! Markov approximation, and verifies the uniform bounds and exponential
//! memory-decay estimates the construction rests on.
//!
//! Start from a [`NetworkParams`] value (or a TOML file via
//! [`config::load_params`]), build a [`Network`], then use:
//!
//! - [`Network::conditional_law`] / [`Network::transition_prob`] /
//!   [`Network::potential`] for the exact per-step law,
//! - [`Network::simulate`] for reproducible sampling,
//! - [`Network::truncated_conditional`] and [`analysis::markov_error`] for
//!   Markov truncations,
//! - [`analysis::measure_variation`] against [`analysis::variation_bound`]
//!   for the memory-decay estimates,
//! - [`analysis::expand_monomials`] for the maximum-entropy monomial view.
//!
//! The `examples/` directory has one runnable example per capability; the
//! thin `gifnet` binary wraps the same operations for batch use.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod kernel;
pub mod model;
pub mod params;
pub mod raster;

mod cli;
#[doc(hidden)]
pub use cli::run_cli;

pub use dynamics::{AlphaProfile, IntegralConfig};
pub use error::{Error, Result};
pub use kernel::{gaussian_tail, Certificate, ConditionalLaw, SimulateOptions};
pub use model::Network;
pub use params::{
    derive_bounds, validate, BoundsTable, CurrentSpec, CurrentTerm, NetworkParams, Population,
    ProfileKind, ValidatedParams,
};
pub use raster::{Past, Raster, ResetTime};
