//! Asynchronous observation times and previous-tick synchronisation.

use std::io::Write;

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hawkes::{self, HawkesSpec};
use crate::paths::PricePath;
use crate::rng;

/// Strictly increasing event times within `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSet {
    times: Vec<f64>,
    horizon: f64,
}

impl ArrivalSet {
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::param("horizon", "must be finite and >= 0"));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::Range(format!(
                "arrival times must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some(t) = times.iter().find(|&&t| !(0.0..=horizon).contains(&t)) {
            return Err(Error::Range(format!("arrival {t} outside [0, {horizon}]")));
        }
        Ok(ArrivalSet { times, horizon })
    }

    pub fn empty(horizon: f64) -> Self {
        ArrivalSet {
            times: Vec::new(),
            horizon,
        }
    }

    /// Caller guarantees the invariants.
    pub(crate) fn from_sorted(times: Vec<f64>, horizon: f64) -> Self {
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        ArrivalSet { times, horizon }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first(&self) -> Option<f64> {
        self.times.first().copied()
    }

    /// Mean gap between consecutive arrivals.
    pub fn mean_interarrival(&self) -> Option<f64> {
        (self.times.len() >= 2).then(|| {
            (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
        })
    }
}

/// Writes `component,t` rows for a family of arrival sets.
pub fn write_arrivals_csv<W: Write>(sets: &[ArrivalSet], mut out: W) -> Result<()> {
    writeln!(out, "component,t")?;
    for (c, set) in sets.iter().enumerate() {
        for t in set.times() {
            writeln!(out, "{c},{t:.9}")?;
        }
    }
    Ok(())
}

/// Irregular observations of one log-price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickSeries {
    times: ArrivalSet,
    values: Vec<f64>,
}

impl TickSeries {
    pub fn new(times: ArrivalSet, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Range("tick values must be finite".into()));
        }
        Ok(TickSeries { times, values })
    }

    pub fn arrivals(&self) -> &ArrivalSet {
        &self.times
    }

    pub fn times(&self) -> &[f64] {
        self.times.times()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.times.horizon()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keeps the observations at 1-based positions `k, 2k, ...`.
    pub fn k_skip(&self, k: usize) -> Result<TickSeries> {
        let idx = skip_indices(self.len(), k)?;
        Ok(TickSeries {
            times: ArrivalSet::from_sorted(idx.clone().map(|i| self.times()[i]).collect(), self.horizon()),
            values: idx.map(|i| self.values[i]).collect(),
        })
    }

    /// Writes `t,logp` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,logp")?;
        for (t, v) in self.times().iter().zip(&self.values) {
            writeln!(out, "{t:.9},{v}")?;
        }
        Ok(())
    }
}

/// Previous-tick values on the grid `h * dt`, `h = 0..=floor(T / dt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSeries {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl GridSeries {
    /// Returns over `((h-1) dt, h dt]` for `h = 1..=floor(T / dt)`.
    pub fn returns(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// Writes `h,t,logp` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "h,t,logp")?;
        for (h, v) in self.values.iter().enumerate() {
            writeln!(out, "{h},{},{v}", h as f64 * self.dt)?;
        }
        Ok(())
    }
}

/// Number of complete `dt` intervals in `[0, horizon]`.
pub fn grid_intervals(horizon: f64, dt: f64) -> usize {
    // tolerate representation error for exact multiples such as 0.3 / 0.1
    ((horizon / dt) * (1.0 + 1e-12)).floor().max(0.0) as usize
}

/// Homogeneous Poisson arrivals on `[0, horizon]`.
pub fn poisson_arrivals(rate: f64, horizon: f64, seed: u64) -> Result<ArrivalSet> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::param("rate", "must be positive"));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::param("horizon", "must be finite and >= 0"));
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut rng = rng::stream(seed, rng::stream_id(rng::tag::POISSON, 0, 0));
    let mut times = Vec::with_capacity((rate * horizon * 1.1) as usize + 8);
    let mut t = 0.0;
    loop {
        let next = t + exp.sample(&mut rng);
        if next > horizon {
            break;
        }
        if next > t {
            times.push(next);
        }
        t = next;
    }
    Ok(ArrivalSet::from_sorted(times, horizon))
}

/// Arrivals of a two-component Hawkes process, one set per asset.
pub fn hawkes_arrivals(spec: &HawkesSpec, horizon: f64, seed: u64) -> Result<[ArrivalSet; 2]> {
    if spec.dim() != 2 {
        return Err(Error::param("spec", "sampling requires a two-component process"));
    }
    let sets = hawkes::simulate_hawkes(spec, horizon, seed)?;
    let [a, b]: [ArrivalSet; 2] = sets.try_into().expect("two components");
    Ok([a, b])
}

/// Reads asset `asset` of `path` at each arrival, using the last grid point at or before it.
pub fn observe_path(path: &PricePath, asset: usize, arrivals: &ArrivalSet) -> Result<TickSeries> {
    if asset > 1 {
        return Err(Error::param("asset", "must be 0 or 1"));
    }
    if path.is_empty() {
        return Err(Error::EmptyInput("price path".into()));
    }
    let (start, end) = (path.t0, path.end_time());
    let last = path.len() - 1;
    let mut values = Vec::with_capacity(arrivals.len());
    for &t in arrivals.times() {
        if t < start || t > end {
            return Err(Error::Range(format!("arrival {t} outside path domain [{start}, {end}]")));
        }
        let mut k = (((t - start) / path.dt).floor() as usize).min(last);
        while k < last && path.time_at(k + 1) <= t {
            k += 1;
        }
        while k > 0 && path.time_at(k) > t {
            k -= 1;
        }
        values.push(path.values[k][asset]);
    }
    Ok(TickSeries {
        times: arrivals.clone(),
        values,
    })
}

/// Observes the whole grid of one asset, i.e. synchronous sampling at every grid point.
pub fn synchronous_ticks(path: &PricePath, asset: usize) -> Result<TickSeries> {
    let times = (0..path.len()).map(|k| path.time_at(k) - path.t0).collect();
    let arrivals = ArrivalSet::new(times, path.end_time() - path.t0)?;
    TickSeries::new(arrivals, path.asset(asset).collect())
}

/// Samples `series` on the grid `h * dt` by previous-tick interpolation.
///
/// Grid points before the first observation take the first observed value.
pub fn previous_tick_grid(series: &TickSeries, dt: f64, horizon: f64) -> Result<GridSeries> {
    if series.is_empty() {
        return Err(Error::EmptyInput("tick series".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be positive"));
    }
    let n = grid_intervals(horizon, dt);
    let (times, vals) = (series.times(), series.values());
    let mut values = Vec::with_capacity(n + 1);
    let mut k = 0usize;
    for h in 0..=n {
        let t = h as f64 * dt;
        while k + 1 < times.len() && times[k + 1] <= t {
            k += 1;
        }
        values.push(vals[k]);
    }
    Ok(GridSeries { dt, values })
}

/// `gamma(t) = max{t_k <= t}` on the grid `h * dt`, `None` before the first arrival.
pub(crate) fn last_arrival_on_grid(times: &[f64], dt: f64, n: usize) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(n + 1);
    let mut next = 0usize;
    for h in 0..=n {
        let t = h as f64 * dt;
        while next < times.len() && times[next] <= t {
            next += 1;
        }
        out.push(next.checked_sub(1).map(|i| times[i]));
    }
    out
}

fn skip_indices(len: usize, k: usize) -> Result<std::iter::StepBy<std::ops::Range<usize>>> {
    if k == 0 {
        return Err(Error::param("k", "must be >= 1"));
    }
    Ok((k - 1..len).step_by(k))
}

/// Every `k`-th arrival: 1-based positions `k, 2k, ..., floor(#U / k) k`.
pub fn k_skip(arrivals: &ArrivalSet, k: usize) -> Result<ArrivalSet> {
    let times = skip_indices(arrivals.len(), k)?.map(|i| arrivals.times[i]).collect();
    Ok(ArrivalSet::from_sorted(times, arrivals.horizon))
}

/// Restarts the clock of a pair of tick series at their first common observation.
///
/// The new origin is the later of the two first observations. On each leg the last observation
/// at or before the origin becomes the value at time 0 and earlier ones are dropped; the horizon
/// shrinks by the origin.
pub fn align_at_first_common(a: &TickSeries, b: &TickSeries) -> Result<(TickSeries, TickSeries)> {
    let (fa, fb) = match (a.times().first(), b.times().first()) {
        (Some(&fa), Some(&fb)) => (fa, fb),
        _ => return Err(Error::EmptyInput("both series need observations".into())),
    };
    let origin = fa.max(fb);
    let horizon = a.horizon().max(b.horizon());
    if origin > horizon {
        return Err(Error::Range("first common observation beyond horizon".into()));
    }
    let shift = |s: &TickSeries| {
        let start = s.times().partition_point(|&t| t <= origin) - 1;
        let mut times: Vec<f64> = s.times()[start..].iter().map(|&t| t - origin).collect();
        times[0] = 0.0;
        TickSeries {
            times: ArrivalSet::from_sorted(times, horizon - origin),
            values: s.values()[start..].to_vec(),
        }
    };
    Ok((shift(a), shift(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(times: &[f64], horizon: f64) -> ArrivalSet {
        ArrivalSet::new(times.to_vec(), horizon).unwrap()
    }

    fn ticks(times: &[f64], values: &[f64], horizon: f64) -> TickSeries {
        TickSeries::new(set(times, horizon), values.to_vec()).unwrap()
    }

    fn ramp(n: usize) -> PricePath {
        PricePath {
            t0: 0.0,
            dt: 1.0,
            values: (0..=n).map(|k| [k as f64, -(k as f64)]).collect(),
        }
    }

    #[test]
    fn arrival_set_invariants() {
        assert!(ArrivalSet::new(vec![1.0, 1.0], 5.0).is_err());
        assert!(ArrivalSet::new(vec![2.0, 1.0], 5.0).is_err());
        assert!(ArrivalSet::new(vec![1.0, 6.0], 5.0).is_err());
        assert!(ArrivalSet::new(vec![0.0, 5.0], 5.0).is_ok());
    }

    #[test]
    fn poisson_count_within_three_sigma() {
        for seed in 0..5 {
            let a = poisson_arrivals(1.0 / 15.0, 72_000.0, seed).unwrap();
            assert!((a.len() as f64 - 4_800.0).abs() < 3.0 * 4_800f64.sqrt(), "{}", a.len());
            assert!(a.times().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn short_horizon_can_be_empty() {
        // first Exp(1e-6) draw is beyond 1 s with overwhelming probability
        assert!(poisson_arrivals(1e-6, 1.0, 0).unwrap().is_empty());
        assert!(poisson_arrivals(1.0, 0.0, 0).unwrap().is_empty());
        assert!(poisson_arrivals(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn hawkes_arrivals_are_deterministic() {
        let spec = HawkesSpec::paper_sampling();
        let a = hawkes_arrivals(&spec, 10_000.0, 4).unwrap();
        assert_eq!(a, hawkes_arrivals(&spec, 10_000.0, 4).unwrap());
        let three = HawkesSpec::new(vec![0.1; 3], vec![vec![0.0; 3]; 3], vec![vec![1.0; 3]; 3]).unwrap();
        assert!(hawkes_arrivals(&three, 10.0, 1).is_err());
    }

    #[test]
    fn observe_uses_previous_grid_point() {
        let path = ramp(10);
        let s = observe_path(&path, 0, &set(&[0.0, 2.0, 3.5, 9.999, 10.0], 10.0)).unwrap();
        assert_eq!(s.values(), &[0.0, 2.0, 3.0, 9.0, 10.0]);
        let s = observe_path(&path, 1, &set(&[3.5], 10.0)).unwrap();
        assert_eq!(s.values(), &[-3.0]);
        assert!(observe_path(&path, 0, &ArrivalSet::empty(10.0)).unwrap().is_empty());
        assert!(matches!(
            observe_path(&path, 0, &set(&[10.5], 11.0)),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn grid_of_single_observation_is_constant() {
        let g = previous_tick_grid(&ticks(&[0.0], &[4.2], 10.0), 2.0, 10.0).unwrap();
        assert_eq!(g.values, vec![4.2; 6]);
        assert!(previous_tick_grid(&ticks(&[], &[], 10.0), 1.0, 10.0).is_err());
    }

    #[test]
    fn grid_backfills_and_uses_ties() {
        let s = ticks(&[2.5, 4.0, 7.2], &[1.0, 2.0, 3.0], 10.0);
        let g = previous_tick_grid(&s, 1.0, 10.0).unwrap();
        assert_eq!(g.values, vec![1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 3.0, 3.0, 3.0]);
        // trailing partial interval dropped
        assert_eq!(previous_tick_grid(&s, 3.0, 10.0).unwrap().values.len(), 4);
    }

    #[test]
    fn grid_matches_brute_force_scan() {
        let a = poisson_arrivals(0.2, 2_000.0, 17).unwrap();
        let vals: Vec<f64> = (0..a.len()).map(|i| (i as f64).sin()).collect();
        let s = TickSeries::new(a.clone(), vals.clone()).unwrap();
        for dt in [0.7, 1.0, 5.0, 33.0] {
            let g = previous_tick_grid(&s, dt, 2_000.0).unwrap();
            for (h, &v) in g.values.iter().enumerate() {
                let t = h as f64 * dt;
                let idx = a.times().iter().rposition(|&x| x <= t).unwrap_or(0);
                assert_eq!(v, vals[idx]);
            }
        }
    }

    #[test]
    fn k_skip_examples() {
        let u = set(&(1..=10).map(f64::from).collect::<Vec<_>>(), 10.0);
        assert_eq!(k_skip(&u, 1).unwrap(), u);
        assert_eq!(k_skip(&u, 3).unwrap().times(), &[3.0, 6.0, 9.0]);
        assert_eq!(k_skip(&u, 11).unwrap().len(), 0);
        assert!(k_skip(&u, 0).is_err());
    }

    #[test]
    fn alignment_carries_standing_value() {
        let a = ticks(&[10.0, 20.0, 40.0], &[1.0, 2.0, 3.0], 100.0);
        let b = ticks(&[30.0, 50.0], &[7.0, 8.0], 100.0);
        let (x, y) = align_at_first_common(&a, &b).unwrap();
        assert_eq!(x.times(), &[0.0, 10.0]);
        assert_eq!(x.values(), &[2.0, 3.0]);
        assert_eq!(y.times(), &[0.0, 20.0]);
        assert_eq!(x.horizon(), 70.0);
    }

    fn arrivals_strategy() -> impl Strategy<Value = ArrivalSet> {
        prop::collection::vec(0.0f64..1_000.0, 0..200).prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            v.dedup();
            ArrivalSet::new(v, 1_000.0).unwrap()
        })
    }

    proptest! {
        #[test]
        fn k_skip_composes(u in arrivals_strategy(), a in 1usize..6, b in 1usize..6) {
            let twice = k_skip(&k_skip(&u, a).unwrap(), b).unwrap();
            prop_assert_eq!(&twice, &k_skip(&u, a * b).unwrap());
            prop_assert_eq!(k_skip(&u, a).unwrap().len(), u.len() / a);
            prop_assert!(twice.times().windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn regridding_is_idempotent(u in arrivals_strategy(), dt in 0.5f64..50.0) {
            prop_assume!(!u.is_empty());
            let vals: Vec<f64> = (0..u.len()).map(|i| i as f64 * 0.5).collect();
            let s = TickSeries::new(u, vals).unwrap();
            let g = previous_tick_grid(&s, dt, 1_000.0).unwrap();
            let n = g.values.len();
            let grid_ticks = TickSeries::new(
                ArrivalSet::new((0..n).map(|h| h as f64 * dt).collect(), 1_000.0).unwrap(),
                g.values.clone(),
            ).unwrap();
            prop_assert_eq!(previous_tick_grid(&grid_ticks, dt, 1_000.0).unwrap(), g);
        }
    }

    #[test]
    fn observing_every_grid_point_reproduces_path() {
        let path = crate::paths::simulate_gbm(
            &crate::paths::GbmParams {
                horizon: 500.0,
                ..crate::paths::GbmParams::paper()
            },
            2,
        )
        .unwrap();
        for asset in 0..2 {
            let s = synchronous_ticks(&path, asset).unwrap();
            let via_observe = observe_path(&path, asset, s.arrivals()).unwrap();
            let g = previous_tick_grid(&via_observe, path.dt, 500.0).unwrap();
            assert_eq!(g.values, path.asset(asset).collect::<Vec<_>>());
        }
    }

    #[test]
    fn csv_writers() {
        let s = ticks(&[0.5], &[1.5], 1.0);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,logp\n0.500000000,1.5\n");
        let mut buf = Vec::new();
        write_arrivals_csv(&[set(&[0.25], 1.0), set(&[0.75], 1.0)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "component,t\n0,0.250000000\n1,0.750000000\n"
        );
        let mut buf = Vec::new();
        GridSeries { dt: 2.0, values: vec![1.0, 2.0] }.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "h,t,logp\n0,0,1\n1,2,2\n");
    }
}
