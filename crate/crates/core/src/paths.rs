//! Synchronous latent price paths on a uniform grid.
//!
//! Parameters are quoted per simulated day and converted to per-second rates with
//! [`SECONDS_PER_DAY`]. Increments of the two assets are jointly Gaussian, built from independent
//! standard normals (rand_distr's ziggurat sampler) through the lower-triangular square root of
//! `[[1, rho], [rho, 1]]`.

use std::io::Write;

use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Length of one simulated day in seconds (20 hours).
pub const SECONDS_PER_DAY: f64 = 72_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    /// Drift per day.
    pub mu: [f64; 2],
    /// Variance per day.
    pub sigma2: [f64; 2],
    /// Correlation of the driving Brownian motions.
    pub rho: f64,
    /// Grid step in seconds.
    pub dt: f64,
    /// Horizon in seconds; a positive multiple of `dt`.
    pub horizon: f64,
}

impl GbmParams {
    /// Brownian model used throughout the simulation study: 20-hour day on a 1 s grid.
    pub fn paper() -> Self {
        GbmParams {
            mu: [0.01, 0.01],
            sigma2: [0.1, 0.2],
            rho: 0.65,
            dt: 1.0,
            horizon: SECONDS_PER_DAY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..2 {
            if !self.mu[i].is_finite() {
                return Err(Error::param(format!("mu[{i}]"), "must be finite"));
            }
            if !(self.sigma2[i] >= 0.0 && self.sigma2[i].is_finite()) {
                return Err(Error::param(format!("sigma2[{i}]"), "must be finite and >= 0"));
            }
        }
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::param("rho", "must lie in [-1, 1]"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        step_count(self.horizon, self.dt)?;
        Ok(())
    }

    fn steps(&self) -> usize {
        step_count(self.horizon, self.dt).expect("validated")
    }
}

/// Number of grid steps in `[0, horizon]`; errors unless `horizon` is a positive multiple of `dt`.
fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("horizon", "must be positive"));
    }
    let ratio = horizon / dt;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::param("horizon", "must be a multiple of dt"));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MertonParams {
    #[serde(flatten)]
    pub diffusion: GbmParams,
    /// Jump intensity per second.
    pub lambda: [f64; 2],
    /// Mean of the log jump size.
    pub jump_mean: [f64; 2],
    /// Standard deviation of the log jump size.
    pub jump_sd: [f64; 2],
}

impl MertonParams {
    /// Jump-diffusion used in the simulation study: Brownian parameters dressed with frequent,
    /// small log-normal jumps.
    pub fn paper() -> Self {
        MertonParams {
            diffusion: GbmParams::paper(),
            lambda: [0.2, 0.2],
            jump_mean: [0.0, 0.0],
            jump_sd: [0.001, 0.001],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.diffusion.validate()?;
        for i in 0..2 {
            if !(self.lambda[i] >= 0.0 && self.lambda[i].is_finite()) {
                return Err(Error::param(format!("lambda[{i}]"), "must be finite and >= 0"));
            }
            if !self.jump_mean[i].is_finite() {
                return Err(Error::param(format!("jump_mean[{i}]"), "must be finite"));
            }
            if !(self.jump_sd[i] >= 0.0 && self.jump_sd[i].is_finite()) {
                return Err(Error::param(format!("jump_sd[{i}]"), "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Two log-price series sampled on `t0 + k * dt`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<[f64; 2]>,
}

impl PricePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        self.time_at(self.values.len().saturating_sub(1))
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn asset(&self, i: usize) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.values.iter().map(move |v| v[i])
    }

    /// Per-step increments of asset `i`.
    pub fn increments(&self, i: usize) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1][i] - w[0][i]).collect()
    }

    /// Writes `t,logp1,logp2` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,logp1,logp2")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{},{}", self.time_at(k), v[0], v[1])?;
        }
        Ok(())
    }
}

/// Correlated Brownian log-prices by Euler-Maruyama:
/// `dX^i = (mu_i - sigma_i^2 / 2) dt + sigma_i dW^i` with `corr(dW^1, dW^2) = rho`.
pub fn simulate_gbm(params: &GbmParams, seed: u64) -> Result<PricePath> {
    params.validate()?;
    let n = params.steps();
    let mut values = Vec::with_capacity(n + 1);
    values.push([0.0, 0.0]);
    let mut x = [0.0f64; 2];
    for dx in diffusion_increments(params, seed) {
        x[0] += dx[0];
        x[1] += dx[1];
        values.push(x);
    }
    Ok(PricePath {
        t0: 0.0,
        dt: params.dt,
        values,
    })
}

/// Per-step Gaussian increments drawn from the diffusion stream of `seed`.
fn diffusion_increments(params: &GbmParams, seed: u64) -> impl Iterator<Item = [f64; 2]> {
    let dt = params.dt;
    let var = params.sigma2.map(|s| s / SECONDS_PER_DAY);
    let drift = [0, 1].map(|i| (params.mu[i] / SECONDS_PER_DAY - var[i] / 2.0) * dt);
    let scale = var.map(|v| (v * dt).sqrt());
    let rho = params.rho;
    let rho_c = (1.0 - rho * rho).max(0.0).sqrt();
    let mut rng = rng::stream(seed, rng::stream_id(tag::DIFFUSION, 0, 0));
    (0..params.steps()).map(move |_| {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let w2 = rho * z1 + rho_c * z2;
        [drift[0] + scale[0] * z1, drift[1] + scale[1] * w2]
    })
}

/// Merton jump-diffusion stored as log-prices.
pub fn simulate_merton(params: &MertonParams, seed: u64) -> Result<PricePath> {
    simulate_merton_with_counts(params, seed).map(|(path, _)| path)
}

/// As [`simulate_merton`], also returning the number of jumps per asset.
///
/// Diffusion draws come from the same stream as [`simulate_gbm`]; each asset's jumps have their
/// own stream, so a zero jump rate reproduces the Brownian path exactly.
pub fn simulate_merton_with_counts(params: &MertonParams, seed: u64) -> Result<(PricePath, [u64; 2])> {
    params.validate()?;
    let p = &params.diffusion;
    let n = p.steps();
    let mut jump_rngs = [
        rng::stream(seed, rng::stream_id(tag::JUMPS_FIRST, 0, 0)),
        rng::stream(seed, rng::stream_id(tag::JUMPS_SECOND, 0, 0)),
    ];
    let counters: [Option<Poisson<f64>>; 2] = [0, 1].map(|i| {
        let m = params.lambda[i] * p.dt;
        (m > 0.0).then(|| Poisson::new(m).expect("positive finite mean"))
    });

    let mut counts = [0u64; 2];
    let mut values = Vec::with_capacity(n + 1);
    values.push([0.0, 0.0]);
    let mut x = [0.0f64; 2];
    for dx in diffusion_increments(p, seed) {
        for i in 0..2 {
            x[i] += dx[i];
            if let Some(counter) = &counters[i] {
                let rng = &mut jump_rngs[i];
                let k = counter.sample(rng) as u64;
                for _ in 0..k {
                    let z: f64 = StandardNormal.sample(rng);
                    x[i] += params.jump_mean[i] + params.jump_sd[i] * z;
                }
                counts[i] += k;
            }
        }
        values.push(x);
    }
    Ok((
        PricePath {
            t0: 0.0,
            dt: p.dt,
            values,
        },
        counts,
    ))
}
