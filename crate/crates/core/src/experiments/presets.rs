//! Figure recipes with every model, sampler and grid parameter pinned.

use serde::{Deserialize, Serialize};

use super::{
    discriminate, epps_curve, experiment_hy_vs_interarrival, experiment_k_skip, experiment_overlap_multi_rate,
    simulate_tick_pair, EppsConfig, EppsCurve, InterarrivalConfig, KSkipConfig, MultiRateConfig, PathProtocol,
    PriceModel, Reference, Sampler, Verdict,
};
use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::hawkes::{HawkesPriceParams, HawkesSpec};
use crate::par::Execution;
use crate::paths::{GbmParams, MertonParams};

pub const FIGURES: [&str; 12] = ["2a", "2b", "3a", "3b", "5", "6a", "6b", "8a", "8b", "9", "10a", "10b"];

pub const DEFAULT_SEED: u64 = 2020;
pub const REPLICATIONS: usize = 100;
pub const HORIZON: f64 = 72_000.0;
pub const INDUCED_CORRELATION: f64 = 0.65;

/// Sampling intervals for the asynchronous Epps figures, seconds.
pub fn dt_grid() -> Vec<f64> {
    vec![1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 30.0, 50.0, 75.0, 100.0]
}

/// Sampling intervals for the synchronous Hawkes price-model figure, seconds.
pub fn synchronous_dt_grid() -> Vec<f64> {
    vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0]
}

/// Mean inter-arrival times 1, 3, ..., 45 seconds.
pub fn interarrival_grid() -> Vec<f64> {
    (0..23).map(|i| (1 + 2 * i) as f64).collect()
}

pub fn gbm() -> PriceModel {
    PriceModel::Gbm(GbmParams::paper())
}

pub fn merton() -> PriceModel {
    PriceModel::Merton(MertonParams::paper())
}

pub fn hawkes_price() -> PriceModel {
    PriceModel::HawkesPrice {
        params: HawkesPriceParams::paper(),
        horizon: HORIZON,
    }
}

pub fn poisson(mean_interarrival: f64) -> Sampler {
    Sampler::Poisson { mean_interarrival }
}

pub fn hawkes_sampler() -> Sampler {
    Sampler::Hawkes {
        spec: HawkesSpec::paper_sampling(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Recipe {
    Epps(EppsConfig),
    Interarrival(InterarrivalConfig),
    MultiRate(MultiRateConfig),
    KSkip(KSkipConfig),
}

fn asynchronous(model: PriceModel, sampler: Sampler, seed: u64) -> EppsConfig {
    let reference = match &model {
        PriceModel::HawkesPrice { params, .. } => Some(Reference::HawkesPrice { params: params.clone() }),
        _ => sampler.mean_interarrival().map(|mean_interarrival| Reference::PoissonEpps {
            c: INDUCED_CORRELATION,
            mean_interarrival,
        }),
    };
    EppsConfig {
        model,
        sampler,
        dt_grid: dt_grid(),
        replications: REPLICATIONS,
        confidence: 0.95,
        seed,
        estimators: vec![Method::Measured, Method::FlatTrade, Method::Overlap, Method::HayashiYoshida],
        protocol: PathProtocol::Single,
        overlap_stride: None,
        reference,
    }
}

impl Recipe {
    /// Recipe for a figure id such as `2a` or `10b`.
    pub fn figure(id: &str, seed: u64) -> Result<Recipe> {
        let recipe = match id {
            "2a" => Recipe::Epps(asynchronous(gbm(), poisson(15.0), seed)),
            "2b" => Recipe::Epps(asynchronous(gbm(), hawkes_sampler(), seed)),
            "3a" => Recipe::Epps(asynchronous(merton(), poisson(15.0), seed)),
            "3b" => Recipe::Epps(asynchronous(merton(), hawkes_sampler(), seed)),
            "5" => Recipe::Epps(EppsConfig {
                sampler: Sampler::Synchronous,
                dt_grid: synchronous_dt_grid(),
                estimators: vec![Method::Measured],
                protocol: PathProtocol::Fresh,
                ..asynchronous(hawkes_price(), Sampler::Synchronous, seed)
            }),
            "6a" => Recipe::Epps(asynchronous(hawkes_price(), poisson(15.0), seed)),
            "6b" => Recipe::Epps(asynchronous(hawkes_price(), hawkes_sampler(), seed)),
            "8a" | "8b" => Recipe::Interarrival(InterarrivalConfig {
                model: if id == "8a" { hawkes_price() } else { gbm() },
                mean_interarrivals: interarrival_grid(),
                replications: REPLICATIONS,
                confidence: 0.95,
                seed,
            }),
            "9" => Recipe::MultiRate(MultiRateConfig {
                model: hawkes_price(),
                mean_interarrivals: vec![1.0, 10.0, 25.0],
                dt_grid: dt_grid(),
                replications: REPLICATIONS,
                confidence: 0.95,
                seed,
                overlap_stride: None,
                reference: Some(Reference::HawkesPrice {
                    params: HawkesPriceParams::paper(),
                }),
            }),
            "10a" | "10b" => Recipe::KSkip(KSkipConfig {
                model: if id == "10a" { hawkes_price() } else { gbm() },
                sampler: poisson(1.0),
                k_max: 50,
                seed,
                thresholds: Default::default(),
            }),
            other => {
                return Err(Error::param(
                    "figure",
                    format!("unknown figure '{other}', expected one of {}", FIGURES.join(", ")),
                ))
            }
        };
        Ok(recipe)
    }

    pub fn seed(&self) -> u64 {
        match self {
            Recipe::Epps(c) => c.seed,
            Recipe::Interarrival(c) => c.seed,
            Recipe::MultiRate(c) => c.seed,
            Recipe::KSkip(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Recipe::Epps(c) => c.seed = seed,
            Recipe::Interarrival(c) => c.seed = seed,
            Recipe::MultiRate(c) => c.seed = seed,
            Recipe::KSkip(c) => c.seed = seed,
        }
    }

    /// Replaces the sampling-interval grid of recipes that have one.
    pub fn set_dt_grid(&mut self, grid: Vec<f64>) -> Result<()> {
        match self {
            Recipe::Epps(c) => c.dt_grid = grid,
            Recipe::MultiRate(c) => c.dt_grid = grid,
            _ => return Err(Error::param("dt_grid", "this experiment has no sampling-interval grid")),
        }
        Ok(())
    }

    /// Replaces the inter-arrival list of recipes that have one.
    pub fn set_rates(&mut self, rates: Vec<f64>) -> Result<()> {
        match self {
            Recipe::Interarrival(c) => c.mean_interarrivals = rates,
            Recipe::MultiRate(c) => c.mean_interarrivals = rates,
            _ => return Err(Error::param("rates", "this experiment has no inter-arrival list")),
        }
        Ok(())
    }

    pub fn set_k_max(&mut self, k_max: usize) -> Result<()> {
        match self {
            Recipe::KSkip(c) => c.k_max = k_max,
            _ => return Err(Error::param("kmax", "only k-skip experiments take k_max")),
        }
        Ok(())
    }

    pub fn set_replications(&mut self, n: usize) -> Result<()> {
        match self {
            Recipe::Epps(c) => c.replications = n,
            Recipe::Interarrival(c) => c.replications = n,
            Recipe::MultiRate(c) => c.replications = n,
            Recipe::KSkip(_) => return Err(Error::param("replications", "k-skip uses one tick set")),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeOutput {
    pub curve: EppsCurve,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

pub fn run_recipe(recipe: &Recipe, execution: Execution) -> Result<RecipeOutput> {
    match recipe {
        Recipe::Epps(c) => Ok(RecipeOutput {
            curve: epps_curve(c, execution)?,
            verdict: None,
        }),
        Recipe::MultiRate(c) => Ok(RecipeOutput {
            curve: experiment_overlap_multi_rate(c, execution)?,
            verdict: None,
        }),
        Recipe::Interarrival(c) => {
            let curve = experiment_hy_vs_interarrival(c, execution)?;
            let verdict = discriminate(&curve, Method::HayashiYoshida.label(), Default::default())?;
            Ok(RecipeOutput {
                curve,
                verdict: Some(verdict),
            })
        }
        Recipe::KSkip(c) => {
            let (si, sj) = simulate_tick_pair(&c.model, &c.sampler, c.seed)?;
            let curve = experiment_k_skip(&si, &sj, c.k_max)?;
            let verdict = discriminate(&curve, Method::HayashiYoshida.label(), c.thresholds)?;
            Ok(RecipeOutput {
                curve,
                verdict: Some(verdict),
            })
        }
    }
}
