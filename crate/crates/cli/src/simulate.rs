//! `simulate`: one latent path or arrival process written as CSV.

use anyhow::{Context, Result};
use epps_core::experiments::presets::{self, DEFAULT_SEED, HORIZON};
use epps_core::experiments::{latent_path_seed, replication_seed, Sampler};
use epps_core::hawkes::{hawkes_price_model, simulate_hawkes, HawkesPriceParams, HawkesSpec};
use epps_core::paths::{simulate_gbm, simulate_merton, GbmParams, MertonParams, PricePath};
use epps_core::rng::{derive_seed, stream_id, tag};
use epps_core::sampling::{poisson_arrivals, write_arrivals_csv, ArrivalSet};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::manifest::OutputDir;
use crate::{command_line, read_config, ModelKind, SimulateArgs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonArrivalParams {
    /// Mean inter-arrival time per asset, seconds.
    pub mean_interarrival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
enum Model {
    Gbm { params: GbmParams },
    Merton { params: MertonParams },
    HawkesPrice { params: HawkesPriceParams, horizon: f64 },
    PoissonArrivals { params: PoissonArrivalParams, horizon: f64 },
    HawkesArrivals { params: HawkesSpec, horizon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Resolved {
    #[serde(flatten)]
    model: Model,
    sampler: Option<Sampler>,
    seed: u64,
}

fn take<T: DeserializeOwned>(table: &mut toml::Table, key: &str) -> Result<Option<T>> {
    table
        .remove(key)
        .map(|v| v.try_into::<T>().with_context(|| format!("config field `{key}`")))
        .transpose()
}

fn params<T: DeserializeOwned>(table: toml::Table) -> Result<T> {
    toml::Value::Table(table).try_into::<T>().context("model parameters")
}

fn paper_model(kind: ModelKind) -> (Model, Option<Sampler>) {
    match kind {
        ModelKind::Gbm => (Model::Gbm { params: GbmParams::paper() }, Some(presets::poisson(15.0))),
        ModelKind::Merton => (
            Model::Merton {
                params: MertonParams::paper(),
            },
            Some(presets::poisson(15.0)),
        ),
        ModelKind::HawkesPrice => (
            Model::HawkesPrice {
                params: HawkesPriceParams::paper(),
                horizon: HORIZON,
            },
            None,
        ),
        ModelKind::PoissonArrivals => (
            Model::PoissonArrivals {
                params: PoissonArrivalParams { mean_interarrival: 15.0 },
                horizon: HORIZON,
            },
            None,
        ),
        ModelKind::HawkesArrivals => (
            Model::HawkesArrivals {
                params: HawkesSpec::paper_sampling(),
                horizon: HORIZON,
            },
            None,
        ),
    }
}

fn file_model(kind: ModelKind, mut table: toml::Table) -> Result<(Model, Option<Sampler>, Option<u64>)> {
    let sampler = take::<Sampler>(&mut table, "sampler")?;
    let seed = take::<u64>(&mut table, "seed")?;
    let horizon = match kind {
        ModelKind::Gbm | ModelKind::Merton => HORIZON,
        _ => take::<f64>(&mut table, "horizon")?.unwrap_or(HORIZON),
    };
    let model = match kind {
        ModelKind::Gbm => Model::Gbm { params: params(table)? },
        ModelKind::Merton => Model::Merton { params: params(table)? },
        ModelKind::HawkesPrice => Model::HawkesPrice {
            params: params(table)?,
            horizon,
        },
        ModelKind::PoissonArrivals => Model::PoissonArrivals {
            params: params(table)?,
            horizon,
        },
        ModelKind::HawkesArrivals => Model::HawkesArrivals {
            params: params(table)?,
            horizon,
        },
    };
    Ok((model, sampler, seed))
}

fn set_horizon(model: &mut Model, value: f64) {
    match model {
        Model::Gbm { params } => params.horizon = value,
        Model::Merton { params } => params.diffusion.horizon = value,
        Model::HawkesPrice { horizon, .. } | Model::PoissonArrivals { horizon, .. } | Model::HawkesArrivals { horizon, .. } => {
            *horizon = value
        }
    }
}

fn resolve(args: &SimulateArgs) -> Result<Resolved> {
    let (mut model, sampler, file_seed) = match &args.config {
        Some(path) => file_model(args.model, read_config(path)?)?,
        None => {
            let (m, s) = paper_model(args.model);
            (m, s, None)
        }
    };
    if let Some(h) = args.horizon {
        set_horizon(&mut model, h);
    }
    Ok(Resolved {
        model,
        sampler,
        seed: args.seed.or(file_seed).unwrap_or(DEFAULT_SEED),
    })
}

fn write_path(out: &mut OutputDir, path: &PricePath, sampler: Option<&Sampler>, seed: u64) -> Result<()> {
    out.write_with("path.csv", |buf| path.write_csv(buf))?;
    if let Some(sampler) = sampler {
        sampler.validate()?;
        let (a, b) = sampler.observe(path, replication_seed(seed, 0, 0))?;
        out.write_with("ticks_1.csv", |buf| a.write_csv(buf))?;
        out.write_with("ticks_2.csv", |buf| b.write_csv(buf))?;
    }
    Ok(())
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let resolved = resolve(args)?;
    let seed = resolved.seed;
    let mut out = OutputDir::create(&args.out)?;
    let path_seed = latent_path_seed(seed);
    let observation_seed = replication_seed(seed, 0, 0);
    match &resolved.model {
        Model::Gbm { params } => write_path(&mut out, &simulate_gbm(params, path_seed)?, resolved.sampler.as_ref(), seed)?,
        Model::Merton { params } => {
            write_path(&mut out, &simulate_merton(params, path_seed)?, resolved.sampler.as_ref(), seed)?
        }
        Model::HawkesPrice { params, horizon } => {
            let run = hawkes_price_model(params, *horizon, path_seed)?;
            write_path(&mut out, &run.path, resolved.sampler.as_ref(), seed)?;
            out.write_with("arrivals.csv", |buf| write_arrivals_csv(&run.arrivals, buf))?;
        }
        Model::PoissonArrivals { params, horizon } => {
            let rate = 1.0 / params.mean_interarrival;
            let sets = [0u16, 1]
                .map(|asset| poisson_arrivals(rate, *horizon, derive_seed(observation_seed, stream_id(tag::POISSON, 0, asset))));
            let sets: Vec<ArrivalSet> = sets.into_iter().collect::<epps_core::Result<_>>()?;
            out.write_with("arrivals.csv", |buf| write_arrivals_csv(&sets, buf))?;
        }
        Model::HawkesArrivals { params, horizon } => {
            let sets = simulate_hawkes(params, *horizon, observation_seed)?;
            out.write_with("arrivals.csv", |buf| write_arrivals_csv(&sets, buf))?;
        }
    }
    if resolved.sampler.is_some() && matches!(resolved.model, Model::PoissonArrivals { .. } | Model::HawkesArrivals { .. }) {
        out.note("sampler ignored: arrival models have no latent path to observe");
    }
    let config = json!(resolved);
    out.finish(&command_line(), config, Some(seed))?;
    Ok(())
}
