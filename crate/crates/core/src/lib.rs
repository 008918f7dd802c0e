//! Simulation, estimation and experiment toolkit for the Epps effect.
//!
//! The crate is organised bottom-up:
//!
//! - [`paths`]: synchronous latent log-price paths (correlated Brownian, Merton jump-diffusion).
//! - [`hawkes`]: exponential-kernel multivariate Hawkes engine and the Hawkes price model,
//!   including its closed-form covariance curves.
//! - [`sampling`]: asynchronous arrival times, previous-tick synchronisation, k-skip thinning.
//! - [`estimators`]: realised covariance, Hayashi-Yoshida, overlap and flat-trade corrections.
//! - [`experiments`]: replicated Epps curves, the discrimination experiments and their verdicts.
//! - [`taq`]: trade-file ingestion and the empirical pipeline helpers.
//!
//! Every simulation is a pure function of its parameters and a seed. Replications run on
//! rayon when the `parallel` feature is enabled and fall back to a sequential loop otherwise;
//! both produce bit-identical results.

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod hawkes;
pub mod par;
pub mod paths;
pub mod rng;
pub mod sampling;
pub mod taq;

pub use error::{Error, Leg, Result};
