//! Hawkes price model: each log-price is the difference of an up-tick and a down-tick counter,
//! `X^1 = X^1_0 + N_1 - N_2`, `X^2 = X^2_0 + N_3 - N_4`, driven by a 4-dimensional Hawkes
//! process in which `phi_r` links the two counters of one asset (mean reversion) and `phi_c`
//! links same-direction counters across assets (correlation).

use serde::{Deserialize, Serialize};

use super::{simulate_hawkes, HawkesSpec};
use crate::error::{Error, Result};
use crate::paths::PricePath;
use crate::sampling::ArrivalSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HawkesPriceParams {
    /// Common baseline intensity, events per second.
    pub mu: f64,
    /// Amplitude of the reversion kernel.
    pub alpha_r: f64,
    /// Amplitude of the cross-asset kernel.
    pub alpha_c: f64,
    /// Common decay rate.
    pub beta: f64,
    /// Initial log-price levels in ticks.
    #[serde(default)]
    pub x0: [i64; 2],
}

impl HawkesPriceParams {
    pub fn paper() -> Self {
        HawkesPriceParams {
            mu: 0.015,
            alpha_r: 0.023,
            alpha_c: 0.05,
            beta: 0.11,
            x0: [0, 0],
        }
    }

    /// `(Gamma_12, Gamma_13)`: L1 norms of the reversion and cross kernels.
    pub fn gammas(&self) -> (f64, f64) {
        (self.alpha_r / self.beta, self.alpha_c / self.beta)
    }

    /// The 4-dimensional Hawkes specification behind the model.
    pub fn spec(&self) -> Result<HawkesSpec> {
        let (r, c) = (self.alpha_r, self.alpha_c);
        HawkesSpec::new(
            vec![self.mu; 4],
            vec![
                vec![0.0, r, c, 0.0],
                vec![r, 0.0, 0.0, c],
                vec![c, 0.0, 0.0, r],
                vec![0.0, c, r, 0.0],
            ],
            vec![vec![self.beta; 4]; 4],
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HawkesPriceRun {
    /// Counter state sampled at every whole second.
    pub path: PricePath,
    /// Raw event times of `N_1..N_4`.
    pub arrivals: Vec<ArrivalSet>,
}

/// Simulates the price model on `[0, horizon]` and samples it every second.
///
/// The grid value at `k` counts every event at times `<= k`.
pub fn hawkes_price_model(params: &HawkesPriceParams, horizon: f64, seed: u64) -> Result<HawkesPriceRun> {
    if !(horizon >= 0.0 && horizon.is_finite() && horizon.fract() == 0.0) {
        return Err(Error::param("horizon", "must be a whole number of seconds >= 0"));
    }
    let spec = params.spec()?;
    let arrivals = simulate_hawkes(&spec, horizon, seed)?;
    let n = horizon as usize;

    // net tick changes per one-second bucket: an event in (k-1, k] lands in bucket k
    let mut delta = vec![[0i64; 2]; n + 1];
    for (component, set) in arrivals.iter().enumerate() {
        let (asset, sign) = (component / 2, if component % 2 == 0 { 1 } else { -1 });
        for &t in set.times() {
            delta[t.ceil() as usize][asset] += sign;
        }
    }
    let mut level = params.x0;
    let values = delta
        .iter()
        .map(|d| {
            level[0] += d[0];
            level[1] += d[1];
            [level[0] as f64, level[1] as f64]
        })
        .collect();
    Ok(HawkesPriceRun {
        path: PricePath {
            t0: 0.0,
            dt: 1.0,
            values,
        },
        arrivals,
    })
}

/// Closed-form covariance of Hawkes price-model increments over an interval `dt`, with the
/// auxiliary constants it is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HawkesCovariance {
    pub dt: f64,
    pub c11: f64,
    pub c12: f64,
    pub lambda: f64,
    pub r: f64,
    pub c1: f64,
    pub c2: f64,
    pub q1: f64,
    /// Defined alongside `q1` but not used by either covariance expression.
    pub q2: f64,
    pub g1: f64,
    pub g2: f64,
}

impl HawkesCovariance {
    pub fn correlation(&self) -> f64 {
        self.c12 / self.c11
    }
}

/// Evaluates the published covariance expressions for `C11(dt)` and `C12(dt)` term by term.
///
/// The `C11` expression carries `Q1 exp(-dt G1)` where the matching `C12` term carries
/// `C1 exp(-dt G1)`; it is evaluated as written.
pub fn theoretical_hawkes_covariance(params: &HawkesPriceParams, dt: f64) -> Result<HawkesCovariance> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be positive"));
    }
    let (g12, g13) = params.gammas();
    let (mu, beta) = (params.mu, params.beta);
    let sub = 1.0 - g12 - g13;
    if !(sub > 0.0) {
        return Err(Error::Domain(format!(
            "1 - Gamma12 - Gamma13 = {sub} must be positive"
        )));
    }
    let anti = 1.0 + g12 - g13;
    if anti == 0.0 {
        return Err(Error::Domain("1 + Gamma12 - Gamma13 = 0".into()));
    }

    let lambda = mu / sub;
    let r = beta * mu / (g12 + g13 - 1.0);
    let c1 = (2.0 + g12 + g13) * (g12 + g13) / (1.0 + g12 + g13);
    let c2 = (2.0 + g12 - g13) * (g12 - g13) / anti;
    let qden = ((g12 + 1.0).powi(2) - g13 * g13) * sub;
    let q1 = -mu * (g12 * g12 + g12 - g13 * g13) / qden;
    let q2 = -mu * g13 / qden;
    let g1 = beta * (1.0 + g12 + g13);
    let g2 = beta * anti;

    let (g1s, g2s) = (g1 * g1, g2 * g2);
    let denom = 2.0 * g2s * g1s * dt;
    // exp(-x) - 1 via expm1 to keep the small-dt cancellations accurate
    let em1 = (-dt * g1).exp_m1();
    let em2 = (-dt * g2).exp_m1();

    let c11_rate = lambda
        + r * c1 / (2.0 * g1)
        + r * c2 / (2.0 * g2)
        + r * (c2 * g1s * em2 + g2s * (q1 * (-dt * g1).exp() - c1)) / denom;
    let c12_rate = -r * c1 / (2.0 * g1)
        + r * c2 / (2.0 * g2)
        + r * (c2 * g1s * em2 - c1 * g2s * em1) / denom;

    Ok(HawkesCovariance {
        dt,
        c11: c11_rate * dt,
        c12: c12_rate * dt,
        lambda,
        r,
        c1,
        c2,
        q1,
        q2,
        g1,
        g2,
    })
}

/// Variant of [`theoretical_hawkes_covariance`] whose `C11` carries `C1 (exp(-dt G1) - 1)`, the
/// same form as the matching `C12` term. With it `C11(dt) / dt` tends to `Lambda` as `dt -> 0`;
/// the published expression diverges there.
pub fn symmetric_hawkes_covariance(params: &HawkesPriceParams, dt: f64) -> Result<HawkesCovariance> {
    let mut c = theoretical_hawkes_covariance(params, dt)?;
    let (g1s, g2s) = (c.g1 * c.g1, c.g2 * c.g2);
    let em1 = (-dt * c.g1).exp_m1();
    let em2 = (-dt * c.g2).exp_m1();
    let rate = c.lambda
        + c.r * c.c1 / (2.0 * c.g1)
        + c.r * c.c2 / (2.0 * c.g2)
        + c.r * (c.c2 * g1s * em2 + c.c1 * g2s * em1) / (2.0 * g2s * g1s * dt);
    c.c11 = rate * dt;
    Ok(c)
}

/// `C12(dt) / C11(dt)` using the symmetry `C11 = C22`.
pub fn theoretical_hawkes_correlation(params: &HawkesPriceParams, dt: f64) -> Result<f64> {
    theoretical_hawkes_covariance(params, dt).map(|c| c.correlation())
}

/// Large-`dt` limit of the price-model correlation.
pub fn limiting_correlation(gamma12: f64, gamma13: f64) -> f64 {
    2.0 * gamma13 * (1.0 + gamma12) / (1.0 + gamma13 * gamma13 + 2.0 * gamma12 + gamma12 * gamma12)
}
