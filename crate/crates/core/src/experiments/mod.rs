//! Replication harness: Epps curves over sampling intervals, inter-arrival and k-skip sweeps,
//! and the verdict that separates discrete-event generators from diffusions.

mod curve;
pub mod presets;
mod verdict;

pub use curve::{ribbon, t_multiplier, Axis, CurvePoint, EppsCurve, ReferencePoint, Ribbon};
pub use verdict::{discriminate, Classification, Verdict, VerdictThresholds};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    flat_trade_correction, flat_trade_probability, hayashi_yoshida, measured_correlation, overlap_correction,
    overlap_expectation_strided, theoretical_poisson_epps, Method,
};
use crate::hawkes::{
    hawkes_price_model, stationary_rates, theoretical_hawkes_correlation, HawkesPriceParams, HawkesSpec,
};
use crate::par::{map_indexed, Execution};
use crate::paths::{simulate_gbm, simulate_merton, GbmParams, MertonParams, PricePath};
use crate::rng::{derive_seed, stream_id, tag};
use crate::sampling::{
    align_at_first_common, hawkes_arrivals, observe_path, poisson_arrivals, previous_tick_grid, synchronous_ticks,
    TickSeries,
};

/// Latent price process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriceModel {
    Gbm(GbmParams),
    Merton(MertonParams),
    HawkesPrice {
        #[serde(flatten)]
        params: HawkesPriceParams,
        horizon: f64,
    },
}

impl PriceModel {
    pub fn horizon(&self) -> f64 {
        match self {
            PriceModel::Gbm(p) => p.horizon,
            PriceModel::Merton(p) => p.diffusion.horizon,
            PriceModel::HawkesPrice { horizon, .. } => *horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PriceModel::Gbm(p) => p.validate(),
            PriceModel::Merton(p) => p.validate(),
            PriceModel::HawkesPrice { params, horizon } => {
                if !(*horizon > 0.0 && horizon.is_finite() && horizon.fract() == 0.0) {
                    return Err(Error::param("model.horizon", "must be a positive whole number of seconds"));
                }
                params.spec()?.validate()
            }
        }
    }

    pub fn simulate(&self, seed: u64) -> Result<PricePath> {
        match self {
            PriceModel::Gbm(p) => simulate_gbm(p, seed),
            PriceModel::Merton(p) => simulate_merton(p, seed),
            PriceModel::HawkesPrice { params, horizon } => hawkes_price_model(params, *horizon, seed).map(|r| r.path),
        }
    }
}

/// How the latent path is observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampler {
    /// Independent Poisson arrivals per asset.
    Poisson { mean_interarrival: f64 },
    /// A two-component Hawkes process, one component per asset.
    Hawkes { spec: HawkesSpec },
    /// Every point of the simulation grid.
    Synchronous,
}

impl Sampler {
    pub fn validate(&self) -> Result<()> {
        match self {
            Sampler::Poisson { mean_interarrival } if !(*mean_interarrival > 0.0 && mean_interarrival.is_finite()) => {
                Err(Error::param("sampler.mean_interarrival", "must be positive"))
            }
            Sampler::Hawkes { spec } if spec.dim() != 2 => {
                Err(Error::param("sampler.spec", "must have two components"))
            }
            Sampler::Hawkes { spec } => spec.validate(),
            _ => Ok(()),
        }
    }

    /// Long-run mean inter-arrival time per asset, if defined.
    pub fn mean_interarrival(&self) -> Option<f64> {
        match self {
            Sampler::Poisson { mean_interarrival } => Some(*mean_interarrival),
            Sampler::Hawkes { spec } => stationary_rates(spec).ok().map(|r| 2.0 / (r[0] + r[1])),
            Sampler::Synchronous => None,
        }
    }

    /// Observes both assets of `path`.
    pub fn observe(&self, path: &PricePath, seed: u64) -> Result<(TickSeries, TickSeries)> {
        let horizon = path.end_time() - path.t0;
        let shifted = |set: crate::sampling::ArrivalSet| {
            let times = set.times().iter().map(|t| t + path.t0).collect();
            crate::sampling::ArrivalSet::new(times, path.end_time())
        };
        let [ui, uj] = match self {
            Sampler::Synchronous => return Ok((synchronous_ticks(path, 0)?, synchronous_ticks(path, 1)?)),
            Sampler::Poisson { mean_interarrival } => {
                let rate = 1.0 / mean_interarrival;
                [0u16, 1].map(|asset| poisson_arrivals(rate, horizon, derive_seed(seed, stream_id(tag::POISSON, 0, asset))))
            }
            Sampler::Hawkes { spec } => {
                let [a, b] = hawkes_arrivals(spec, horizon, seed)?;
                [Ok(a), Ok(b)]
            }
        };
        let (ui, uj) = (shifted(ui?)?, shifted(uj?)?);
        Ok((observe_path(path, 0, &ui)?, observe_path(path, 1, &uj)?))
    }
}

/// Whether replications re-sample one latent path or simulate a fresh one each.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathProtocol {
    #[default]
    Single,
    Fresh,
}

/// Analytic curve drawn alongside the estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    /// Measured correlation under Poisson sampling.
    PoissonEpps { c: f64, mean_interarrival: f64 },
    /// Synchronous correlation of the Hawkes price model.
    HawkesPrice {
        #[serde(flatten)]
        params: HawkesPriceParams,
    },
}

impl Reference {
    pub fn value(&self, dt: f64) -> Result<f64> {
        match self {
            Reference::PoissonEpps { c, mean_interarrival } => Ok(theoretical_poisson_epps(*c, 1.0 / mean_interarrival, dt)),
            Reference::HawkesPrice { params } => theoretical_hawkes_correlation(params, dt),
        }
    }
}

fn default_confidence() -> f64 {
    0.95
}

fn default_estimators() -> Vec<Method> {
    vec![Method::Measured, Method::FlatTrade, Method::Overlap, Method::HayashiYoshida]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EppsConfig {
    pub model: PriceModel,
    pub sampler: Sampler,
    pub dt_grid: Vec<f64>,
    pub replications: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    pub seed: u64,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Method>,
    #[serde(default)]
    pub protocol: PathProtocol,
    /// Spacing of overlap windows; the sampling interval when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_stride: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
}

pub(crate) fn validate_dt_grid(grid: &[f64], field: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param(field, "must not be empty"));
    }
    if grid.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::param(field, "values must be positive"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(field, "must be strictly increasing"));
    }
    Ok(())
}

fn validate_common(replications: usize, confidence: f64) -> Result<()> {
    if replications == 0 {
        return Err(Error::param("replications", "must be >= 1"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::param("confidence", "must lie in (0, 1)"));
    }
    Ok(())
}

impl EppsConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.sampler.validate()?;
        validate_dt_grid(&self.dt_grid, "dt_grid")?;
        validate_common(self.replications, self.confidence)?;
        if self.estimators.is_empty() {
            return Err(Error::param("estimators", "must not be empty"));
        }
        if let Some(s) = self.overlap_stride {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param("overlap_stride", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Estimates for one observed pair: `out[e][d]` is estimator `e` at `dt_grid[d]`.
///
/// The pair is re-timed at its first common observation before gridding. Hayashi-Yoshida uses
/// the raw ticks and repeats its single value across the grid. Failed estimates are `None`.
pub fn evaluate_pair(
    si: &TickSeries,
    sj: &TickSeries,
    dt_grid: &[f64],
    estimators: &[Method],
    overlap_stride: Option<f64>,
) -> Vec<Vec<Option<f64>>> {
    let want = |m| estimators.contains(&m);
    let hy = want(Method::HayashiYoshida)
        .then(|| hayashi_yoshida(si, sj).ok().map(|e| e.rho))
        .flatten();
    let aligned = align_at_first_common(si, sj).ok();

    let mut by_method: Vec<(Method, Vec<Option<f64>>)> = Vec::new();
    let mut measured = Vec::with_capacity(dt_grid.len());
    let mut flat = Vec::with_capacity(dt_grid.len());
    let mut overlap = Vec::with_capacity(dt_grid.len());
    for &dt in dt_grid {
        let (m, f, o) = match &aligned {
            Some((ai, aj)) => evaluate_at(ai, aj, dt, overlap_stride, want(Method::FlatTrade), want(Method::Overlap)),
            None => (None, None, None),
        };
        measured.push(m);
        flat.push(f);
        overlap.push(o);
    }
    by_method.push((Method::Measured, measured));
    by_method.push((Method::FlatTrade, flat));
    by_method.push((Method::Overlap, overlap));
    by_method.push((Method::HayashiYoshida, vec![hy; dt_grid.len()]));

    estimators
        .iter()
        .map(|m| {
            by_method
                .iter()
                .find(|(k, _)| k == m)
                .map(|(_, v)| v.clone())
                .expect("every method evaluated")
        })
        .collect()
}

fn evaluate_at(
    ai: &TickSeries,
    aj: &TickSeries,
    dt: f64,
    stride: Option<f64>,
    flat: bool,
    overlap: bool,
) -> (Option<f64>, Option<f64>, Option<f64>) {
    let horizon = ai.horizon();
    let grids = previous_tick_grid(ai, dt, horizon).and_then(|gi| Ok((gi, previous_tick_grid(aj, dt, horizon)?)));
    let Ok((gi, gj)) = grids else {
        return (None, None, None);
    };
    let Ok(measured) = measured_correlation(&gi, &gj) else {
        return (None, None, None);
    };
    let rho = measured.rho;
    let flat_rho = flat
        .then(|| {
            let p_i = flat_trade_probability(&gi).ok()?;
            let p_j = flat_trade_probability(&gj).ok()?;
            flat_trade_correction(rho, p_i, p_j, Some(dt)).ok().map(|e| e.rho)
        })
        .flatten();
    let overlap_rho = overlap
        .then(|| {
            let stats =
                overlap_expectation_strided(ai.arrivals(), aj.arrivals(), dt, horizon, stride.unwrap_or(dt)).ok()?;
            overlap_correction(rho, &stats).ok().map(|e| e.rho)
        })
        .flatten();
    (Some(rho), flat_rho, overlap_rho)
}

/// Summarises per-replication estimates `reps[r][e][d]` into curve points.
fn summarise(
    curve: &mut EppsCurve,
    axis: &[f64],
    labels: &[String],
    reps: &[Vec<Vec<Option<f64>>>],
    confidence: f64,
) -> Result<()> {
    for (e, label) in labels.iter().enumerate() {
        for (d, &x) in axis.iter().enumerate() {
            let values: Vec<Option<f64>> = reps.iter().map(|r| r[e][d]).collect();
            curve.points.push(CurvePoint::summarise(x, label.clone(), &values, confidence)?);
        }
    }
    Ok(())
}

/// Seed of replication `r` within sweep `sweep`.
pub fn replication_seed(seed: u64, r: usize, sweep: u16) -> u64 {
    derive_seed(seed, stream_id(tag::REPLICATION, r as u32, sweep))
}

/// Seed of the latent path shared by all replications of a run.
pub fn latent_path_seed(seed: u64) -> u64 {
    derive_seed(seed, stream_id(tag::LATENT_PATH, 0, 0))
}

fn replicate(
    config: &EppsConfig,
    sweep: u16,
    latent: Option<&PricePath>,
    execution: Execution,
) -> Vec<Vec<Vec<Option<f64>>>> {
    let failed = || vec![vec![None; config.dt_grid.len()]; config.estimators.len()];
    map_indexed(config.replications, execution, |r| {
        let seed = replication_seed(config.seed, r, sweep);
        let fresh;
        let path = match latent {
            Some(p) => p,
            None => match config.model.simulate(latent_path_seed(seed)) {
                Ok(p) => {
                    fresh = p;
                    &fresh
                }
                Err(_) => return failed(),
            },
        };
        match config.sampler.observe(path, seed) {
            Ok((si, sj)) => evaluate_pair(&si, &sj, &config.dt_grid, &config.estimators, config.overlap_stride),
            Err(_) => failed(),
        }
    })
}

fn epps_curve_sweep(config: &EppsConfig, sweep: u16, execution: Execution) -> Result<EppsCurve> {
    config.validate()?;
    let latent = match config.protocol {
        PathProtocol::Single => Some(config.model.simulate(latent_path_seed(config.seed))?),
        PathProtocol::Fresh => None,
    };
    let reps = replicate(config, sweep, latent.as_ref(), execution);
    let labels: Vec<String> = config.estimators.iter().map(|m| m.label().to_string()).collect();
    let mut curve = EppsCurve::new(Axis::Dt, config.confidence);
    summarise(&mut curve, &config.dt_grid, &labels, &reps, config.confidence)?;
    if let Some(reference) = &config.reference {
        for &dt in &config.dt_grid {
            curve.reference.push(ReferencePoint {
                axis: dt,
                value: reference.value(dt)?,
            });
        }
    }
    Ok(curve)
}

/// Epps curve of every requested estimator over the configured sampling intervals.
pub fn epps_curve(config: &EppsConfig, execution: Execution) -> Result<EppsCurve> {
    epps_curve_sweep(config, 0, execution)
}

/// Epps curve over a fixed ensemble of observed pairs, one replication per pair.
pub fn epps_curve_from_pairs(
    pairs: &[(TickSeries, TickSeries)],
    dt_grid: &[f64],
    estimators: &[Method],
    confidence: f64,
    overlap_stride: Option<f64>,
    execution: Execution,
) -> Result<EppsCurve> {
    validate_dt_grid(dt_grid, "dt_grid")?;
    validate_common(pairs.len(), confidence)?;
    let reps = map_indexed(pairs.len(), execution, |r| {
        evaluate_pair(&pairs[r].0, &pairs[r].1, dt_grid, estimators, overlap_stride)
    });
    let labels: Vec<String> = estimators.iter().map(|m| m.label().to_string()).collect();
    let mut curve = EppsCurve::new(Axis::Dt, confidence);
    summarise(&mut curve, dt_grid, &labels, &reps, confidence)?;
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterarrivalConfig {
    pub model: PriceModel,
    /// Mean inter-arrival times `1/lambda` of the Poisson sampler, seconds.
    pub mean_interarrivals: Vec<f64>,
    pub replications: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    pub seed: u64,
}

/// Hayashi-Yoshida estimate against the mean inter-arrival of Poisson sampling on one latent path.
pub fn experiment_hy_vs_interarrival(config: &InterarrivalConfig, execution: Execution) -> Result<EppsCurve> {
    config.model.validate()?;
    validate_dt_grid(&config.mean_interarrivals, "mean_interarrivals")?;
    validate_common(config.replications, config.confidence)?;
    let path = config.model.simulate(latent_path_seed(config.seed))?;
    let n = config.replications;
    let rates = &config.mean_interarrivals;
    // flattened (rate, replication) jobs
    let estimates = map_indexed(rates.len() * n, execution, |job| {
        let (q, r) = (job / n, job % n);
        let sampler = Sampler::Poisson {
            mean_interarrival: rates[q],
        };
        let seed = replication_seed(config.seed, r, q as u16);
        sampler
            .observe(&path, seed)
            .ok()
            .and_then(|(si, sj)| hayashi_yoshida(&si, &sj).ok())
            .map(|e| e.rho)
    });
    let mut curve = EppsCurve::new(Axis::MeanInterarrival, config.confidence);
    for (q, &x) in rates.iter().enumerate() {
        let label = Method::HayashiYoshida.label();
        curve
            .points
            .push(CurvePoint::summarise(x, label, &estimates[q * n..(q + 1) * n], config.confidence)?);
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRateConfig {
    pub model: PriceModel,
    pub mean_interarrivals: Vec<f64>,
    pub dt_grid: Vec<f64>,
    pub replications: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_stride: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
}

/// Label of the overlap-corrected series for one sampling rate.
pub fn multi_rate_label(mean_interarrival: f64) -> String {
    format!("overlap[1/lambda={mean_interarrival}]")
}

/// Overlap-corrected Epps curves of one latent path under Poisson sampling at several rates.
pub fn experiment_overlap_multi_rate(config: &MultiRateConfig, execution: Execution) -> Result<EppsCurve> {
    if config.mean_interarrivals.is_empty() {
        return Err(Error::param("mean_interarrivals", "must not be empty"));
    }
    let mut out = EppsCurve::new(Axis::Dt, config.confidence);
    for (q, &mean_interarrival) in config.mean_interarrivals.iter().enumerate() {
        let single = EppsConfig {
            model: config.model.clone(),
            sampler: Sampler::Poisson { mean_interarrival },
            dt_grid: config.dt_grid.clone(),
            replications: config.replications,
            confidence: config.confidence,
            seed: config.seed,
            estimators: vec![Method::Overlap],
            protocol: PathProtocol::Single,
            overlap_stride: config.overlap_stride,
            reference: if q == 0 { config.reference.clone() } else { None },
        };
        let mut curve = epps_curve_sweep(&single, q as u16, execution)?;
        for p in &mut curve.points {
            p.estimator = multi_rate_label(mean_interarrival);
        }
        out.points.append(&mut curve.points);
        out.reference.append(&mut curve.reference);
    }
    Ok(out)
}

/// Largest usable skip factor: each thinned series keeps at least two ticks.
pub fn max_feasible_skip(len_i: usize, len_j: usize) -> usize {
    len_i.min(len_j) / 2
}

/// Hayashi-Yoshida estimate of one observed pair thinned to every `k`-th tick, `k = 1..=k_max`.
///
/// When the series are too short for `k_max` the range is truncated and a note is recorded.
pub fn experiment_k_skip(si: &TickSeries, sj: &TickSeries, k_max: usize) -> Result<EppsCurve> {
    if k_max == 0 {
        return Err(Error::param("k_max", "must be >= 1"));
    }
    let feasible = max_feasible_skip(si.len(), sj.len());
    if feasible == 0 {
        return Err(Error::InsufficientData("each series needs at least two ticks".into()));
    }
    let top = k_max.min(feasible);
    let mut curve = EppsCurve::new(Axis::Skip, default_confidence());
    if top < k_max {
        curve.notes.push(format!("k range truncated to 1..={top} (requested {k_max})"));
    }
    for k in 1..=top {
        let rho = hayashi_yoshida(&si.k_skip(k)?, &sj.k_skip(k)?).ok().map(|e| e.rho);
        curve
            .points
            .push(CurvePoint::summarise(k as f64, Method::HayashiYoshida.label(), &[rho], curve.confidence)?);
    }
    Ok(curve)
}

/// k-skip curve over an ensemble of observed pairs (e.g. trading days), one replication per pair.
///
/// A pair too short for some `k` counts as a failure at that `k`.
pub fn experiment_k_skip_ensemble(
    pairs: &[(TickSeries, TickSeries)],
    k_max: usize,
    confidence: f64,
    execution: Execution,
) -> Result<EppsCurve> {
    if k_max == 0 {
        return Err(Error::param("k_max", "must be >= 1"));
    }
    validate_common(pairs.len(), confidence)?;
    let estimates = map_indexed(pairs.len(), execution, |r| {
        let (si, sj) = &pairs[r];
        let feasible = max_feasible_skip(si.len(), sj.len());
        (1..=k_max)
            .map(|k| {
                if k > feasible {
                    return None;
                }
                let (a, b) = (si.k_skip(k).ok()?, sj.k_skip(k).ok()?);
                hayashi_yoshida(&a, &b).ok().map(|e| e.rho)
            })
            .collect::<Vec<_>>()
    });
    let mut curve = EppsCurve::new(Axis::Skip, confidence);
    for k in 1..=k_max {
        let values: Vec<Option<f64>> = estimates.iter().map(|e| e[k - 1]).collect();
        curve
            .points
            .push(CurvePoint::summarise(k as f64, Method::HayashiYoshida.label(), &values, confidence)?);
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSkipConfig {
    pub model: PriceModel,
    /// Sampler producing the single observed tick set.
    pub sampler: Sampler,
    pub k_max: usize,
    pub seed: u64,
    #[serde(default)]
    pub thresholds: VerdictThresholds,
}

/// Simulates one latent path and observes it once.
pub fn simulate_tick_pair(model: &PriceModel, sampler: &Sampler, seed: u64) -> Result<(TickSeries, TickSeries)> {
    model.validate()?;
    sampler.validate()?;
    let path = model.simulate(latent_path_seed(seed))?;
    sampler.observe(&path, replication_seed(seed, 0, 0))
}
