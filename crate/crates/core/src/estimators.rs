//! Correlation estimators for asynchronously observed prices and their asynchrony corrections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Leg, Result};
use crate::sampling::{grid_intervals, last_arrival_on_grid, ArrivalSet, GridSeries, TickSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Measured,
    FlatTrade,
    Overlap,
    HayashiYoshida,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Measured => "measured",
            Method::FlatTrade => "flat_trade",
            Method::Overlap => "overlap",
            Method::HayashiYoshida => "hayashi_yoshida",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostics {
    Covariances { cov: f64, var_i: f64, var_j: f64 },
    FlatTrade { p_i: f64, p_j: f64, factor: f64 },
    Overlap { kappa_ii: f64, kappa_jj: f64, kappa_ij: f64, factor: f64 },
}

/// A correlation estimate. Corrected values are not clamped to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub rho: f64,
    /// Sampling interval, absent for interval-free estimators.
    pub dt: Option<f64>,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

/// Expected lengths of own- and cross-interval overlaps at one `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapStats {
    pub dt: f64,
    pub kappa_ii: f64,
    pub kappa_jj: f64,
    pub kappa_ij: f64,
    /// Number of windows averaged.
    pub windows: usize,
}

impl OverlapStats {
    /// `kappa_ij / sqrt(kappa_ii kappa_jj)`, the expected attenuation of the measured correlation.
    pub fn attenuation(&self) -> f64 {
        self.kappa_ij / (self.kappa_ii * self.kappa_jj).sqrt()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn check_grids(gi: &GridSeries, gj: &GridSeries) -> Result<()> {
    if gi.dt != gj.dt || gi.values.len() != gj.values.len() {
        return Err(Error::Shape(format!(
            "grids differ: dt {} vs {}, length {} vs {}",
            gi.dt,
            gj.dt,
            gi.values.len(),
            gj.values.len()
        )));
    }
    Ok(())
}

/// Sum of products of grid returns, `sum_h dX^i_h dX^j_h`.
pub fn realised_covariance(gi: &GridSeries, gj: &GridSeries) -> Result<f64> {
    check_grids(gi, gj)?;
    let mut acc = CompensatedSum::default();
    for (a, b) in gi.returns().zip(gj.returns()) {
        acc.add(a * b);
    }
    Ok(acc.value())
}

/// Realised correlation of two previous-tick grids.
pub fn measured_correlation(gi: &GridSeries, gj: &GridSeries) -> Result<CorrelationEstimate> {
    let cov = realised_covariance(gi, gj)?;
    let var_i = realised_covariance(gi, gi)?;
    let var_j = realised_covariance(gj, gj)?;
    if let Some(leg) = Leg::from_flags(!(var_i > 0.0), !(var_j > 0.0)) {
        return Err(Error::DegenerateVariance(leg));
    }
    Ok(CorrelationEstimate {
        rho: cov / (var_i * var_j).sqrt(),
        dt: Some(gi.dt),
        method: Method::Measured,
        diagnostics: Diagnostics::Covariances { cov, var_i, var_j },
    })
}

fn returns(s: &TickSeries) -> Vec<f64> {
    s.values().windows(2).map(|w| w[1] - w[0]).collect()
}

/// Hayashi-Yoshida cross covariance of two tick series.
///
/// Sums `r^i_l r^j_k` over all pairs whose intervals `(t_{l-1}, t_l]` and `(t_{k-1}, t_k]`
/// intersect; intervals that only share an endpoint do not. A two-cursor sweep visits each
/// overlapping pair once.
pub fn hayashi_yoshida_covariance(si: &TickSeries, sj: &TickSeries) -> f64 {
    let (ti, tj) = (si.times(), sj.times());
    let (ri, rj) = (returns(si), returns(sj));
    let mut acc = CompensatedSum::default();
    let mut first = 0usize;
    for (l, r) in ri.iter().enumerate() {
        let (a, b) = (ti[l], ti[l + 1]);
        // j-intervals ending at or before `a` cannot meet this or any later i-interval
        while first < rj.len() && tj[first + 1] <= a {
            first += 1;
        }
        let mut inner = CompensatedSum::default();
        let mut k = first;
        while k < rj.len() && tj[k] < b {
            inner.add(rj[k]);
            k += 1;
        }
        acc.add(r * inner.value());
    }
    acc.value()
}

fn sum_of_squares(s: &TickSeries) -> f64 {
    let mut acc = CompensatedSum::default();
    for r in returns(s) {
        acc.add(r * r);
    }
    acc.value()
}

/// Hayashi-Yoshida correlation; independent of any sampling interval.
pub fn hayashi_yoshida(si: &TickSeries, sj: &TickSeries) -> Result<CorrelationEstimate> {
    if si.len() < 2 || sj.len() < 2 {
        return Err(Error::InsufficientData(
            "Hayashi-Yoshida needs at least two observations per series".into(),
        ));
    }
    let var_i = sum_of_squares(si);
    let var_j = sum_of_squares(sj);
    if let Some(leg) = Leg::from_flags(!(var_i > 0.0), !(var_j > 0.0)) {
        return Err(Error::DegenerateVariance(leg));
    }
    let cov = hayashi_yoshida_covariance(si, sj);
    Ok(CorrelationEstimate {
        rho: cov / (var_i * var_j).sqrt(),
        dt: None,
        method: Method::HayashiYoshida,
        diagnostics: Diagnostics::Covariances { cov, var_i, var_j },
    })
}

/// Estimates the expected own- and cross-overlap of previous-tick return windows at `dt`.
///
/// Windows `[t - dt, t]` end on the grid `t = h dt`; a window is used only once both sets
/// have an observation at or before its start.
pub fn overlap_expectation(ui: &ArrivalSet, uj: &ArrivalSet, dt: f64, horizon: f64) -> Result<OverlapStats> {
    overlap_expectation_strided(ui, uj, dt, horizon, dt)
}

/// As [`overlap_expectation`], with window end points every `stride` seconds instead of every
/// `dt`.
pub fn overlap_expectation_strided(
    ui: &ArrivalSet,
    uj: &ArrivalSet,
    dt: f64,
    horizon: f64,
    stride: f64,
) -> Result<OverlapStats> {
    if ui.is_empty() || uj.is_empty() {
        return Err(Error::EmptyInput("overlap needs observations in both sets".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be positive"));
    }
    if !(stride > 0.0 && stride.is_finite()) {
        return Err(Error::param("stride", "must be positive"));
    }

    let (sum_ii, sum_jj, sum_ij, windows) = if stride == dt {
        let n = grid_intervals(horizon, dt);
        let gi = last_arrival_on_grid(ui.times(), dt, n);
        let gj = last_arrival_on_grid(uj.times(), dt, n);
        accumulate_overlaps((1..=n).map(|h| (gi[h - 1], gi[h], gj[h - 1], gj[h])))
    } else {
        let n = grid_intervals(horizon - dt, stride);
        let gamma = |times: &[f64], t: f64| {
            let p = times.partition_point(|&x| x <= t);
            p.checked_sub(1).map(|i| times[i])
        };
        accumulate_overlaps((0..=n).map(|m| {
            let end = dt + m as f64 * stride;
            (
                gamma(ui.times(), end - dt),
                gamma(ui.times(), end),
                gamma(uj.times(), end - dt),
                gamma(uj.times(), end),
            )
        }))
    };
    if windows == 0 {
        return Err(Error::InsufficientData(format!(
            "no window of length {dt} after the first common observation"
        )));
    }
    let w = windows as f64;
    Ok(OverlapStats {
        dt,
        kappa_ii: sum_ii / w,
        kappa_jj: sum_jj / w,
        kappa_ij: sum_ij / w,
        windows,
    })
}

type Window = (Option<f64>, Option<f64>, Option<f64>, Option<f64>);

fn accumulate_overlaps(windows: impl Iterator<Item = Window>) -> (f64, f64, f64, usize) {
    let (mut ii, mut jj, mut ij) = (CompensatedSum::default(), CompensatedSum::default(), CompensatedSum::default());
    let mut count = 0usize;
    for w in windows {
        let (Some(i0), Some(i1), Some(j0), Some(j1)) = w else {
            continue;
        };
        ii.add(i1 - i0);
        jj.add(j1 - j0);
        ij.add((i1.min(j1) - i0.max(j0)).max(0.0));
        count += 1;
    }
    (ii.value(), jj.value(), ij.value(), count)
}

/// Rescales a measured correlation by `sqrt(kappa_ii kappa_jj) / kappa_ij`.
pub fn overlap_correction(rho_tilde: f64, stats: &OverlapStats) -> Result<CorrelationEstimate> {
    if !(stats.kappa_ij > 0.0) {
        return Err(Error::NoOverlap);
    }
    let factor = (stats.kappa_ii * stats.kappa_jj).sqrt() / stats.kappa_ij;
    Ok(CorrelationEstimate {
        rho: rho_tilde * factor,
        dt: Some(stats.dt),
        method: Method::Overlap,
        diagnostics: Diagnostics::Overlap {
            kappa_ii: stats.kappa_ii,
            kappa_jj: stats.kappa_jj,
            kappa_ij: stats.kappa_ij,
            factor,
        },
    })
}

/// Fraction of grid returns that are exactly zero.
pub fn flat_trade_probability(g: &GridSeries) -> Result<f64> {
    let n = g.values.len().saturating_sub(1);
    if n == 0 {
        return Err(Error::InsufficientData("no return interval on the grid".into()));
    }
    let flat = g.returns().filter(|&r| r == 0.0).count();
    Ok(flat as f64 / n as f64)
}

/// Rescales a measured correlation by `(1 - p_i p_j) / ((1 - p_i)(1 - p_j))`.
pub fn flat_trade_correction(rho_tilde: f64, p_i: f64, p_j: f64, dt: Option<f64>) -> Result<CorrelationEstimate> {
    for (name, p) in [("p_i", p_i), ("p_j", p_j)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(name, "must lie in [0, 1]"));
        }
    }
    if let Some(leg) = Leg::from_flags(p_i == 1.0, p_j == 1.0) {
        return Err(Error::Saturation(leg));
    }
    let factor = (1.0 - p_i * p_j) / ((1.0 - p_i) * (1.0 - p_j));
    Ok(CorrelationEstimate {
        rho: rho_tilde * factor,
        dt,
        method: Method::FlatTrade,
        diagnostics: Diagnostics::FlatTrade { p_i, p_j, factor },
    })
}

/// Measured correlation expected under independent Poisson sampling at rate `lambda`:
/// `c (1 + (exp(-lambda dt) - 1) / (lambda dt))`.
pub fn theoretical_poisson_epps(c: f64, lambda: f64, dt: f64) -> f64 {
    let x = lambda * dt;
    c * (1.0 + (-x).exp_m1() / x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(values: &[f64], dt: f64) -> GridSeries {
        GridSeries {
            dt,
            values: values.to_vec(),
        }
    }

    fn ticks(times: &[f64], values: &[f64]) -> TickSeries {
        let horizon = times.last().copied().unwrap_or(0.0);
        TickSeries::new(ArrivalSet::new(times.to_vec(), horizon).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn straight_line_covariance() {
        let (r, n) = (2.0, 8);
        let line: Vec<f64> = (0..=n).map(|k| r * k as f64 / n as f64).collect();
        let g = grid(&line, 1.0);
        let cov = realised_covariance(&g, &g).unwrap();
        assert!((cov - r * r / n as f64).abs() < 1e-14);
        assert_eq!(realised_covariance(&g, &grid(&[3.0; 9], 1.0)).unwrap(), 0.0);
        assert!(matches!(
            realised_covariance(&g, &grid(&[0.0; 8], 1.0)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn measured_correlation_extremes() {
        let g = grid(&[0.0, 1.0, 0.5, 2.0, 1.0], 1.0);
        let neg = grid(&[0.0, -1.0, -0.5, -2.0, -1.0], 1.0);
        assert!((measured_correlation(&g, &g).unwrap().rho - 1.0).abs() < 1e-15);
        assert!((measured_correlation(&g, &neg).unwrap().rho + 1.0).abs() < 1e-15);
        let flat = grid(&[1.0; 5], 1.0);
        assert!(matches!(
            measured_correlation(&g, &flat),
            Err(Error::DegenerateVariance(Leg::Second))
        ));
        assert!(matches!(
            measured_correlation(&flat, &flat),
            Err(Error::DegenerateVariance(Leg::Both))
        ));
    }

    #[test]
    fn hy_identical_series_is_one() {
        let s = ticks(&[0.0, 1.3, 2.0, 5.5, 7.0], &[0.0, 0.4, -0.1, 0.3, 0.2]);
        assert!((hayashi_yoshida(&s, &s).unwrap().rho - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hy_shared_endpoint_is_not_overlap() {
        // (0, 1] and (1, 2] touch only at 1
        let a = ticks(&[0.0, 1.0], &[0.0, 1.0]);
        let b = TickSeries::new(ArrivalSet::new(vec![1.0, 2.0], 2.0).unwrap(), vec![0.0, 1.0]).unwrap();
        assert_eq!(hayashi_yoshida_covariance(&a, &b), 0.0);
        let c = TickSeries::new(ArrivalSet::new(vec![0.5, 2.0], 2.0).unwrap(), vec![0.0, 1.0]).unwrap();
        assert_eq!(hayashi_yoshida_covariance(&a, &c), 1.0);
    }

    #[test]
    fn hy_degenerate_inputs() {
        let one = ticks(&[0.0], &[1.0]);
        let s = ticks(&[0.0, 1.0], &[0.0, 1.0]);
        assert!(matches!(hayashi_yoshida(&one, &s), Err(Error::InsufficientData(_))));
        let flat = ticks(&[0.0, 1.0], &[2.0, 2.0]);
        assert!(matches!(
            hayashi_yoshida(&flat, &s),
            Err(Error::DegenerateVariance(Leg::First))
        ));
    }

    #[test]
    fn overlap_on_common_grid_equals_dt() {
        let times: Vec<f64> = (0..=100).map(|h| h as f64 * 5.0).collect();
        let u = ArrivalSet::new(times, 500.0).unwrap();
        let k = overlap_expectation(&u, &u, 5.0, 500.0).unwrap();
        assert_eq!((k.kappa_ii, k.kappa_jj, k.kappa_ij), (5.0, 5.0, 5.0));
        assert_eq!(k.windows, 100);
        let c = overlap_correction(0.4, &k).unwrap();
        assert_eq!(c.rho, 0.4);
    }

    #[test]
    fn overlap_of_alternating_sparse_sets_vanishes() {
        let ui = ArrivalSet::new((0..10).map(|k| k as f64 * 100.0).collect(), 1_000.0).unwrap();
        let uj = ArrivalSet::new((0..10).map(|k| k as f64 * 100.0 + 50.0).collect(), 1_000.0).unwrap();
        let k = overlap_expectation(&ui, &uj, 1.0, 1_000.0).unwrap();
        assert_eq!(k.kappa_ij, 0.0);
        assert!(k.kappa_ii > 0.0);
        assert!(matches!(overlap_correction(0.1, &k), Err(Error::NoOverlap)));
        assert!(overlap_expectation(&ArrivalSet::empty(1.0), &uj, 1.0, 1.0).is_err());
    }

    #[test]
    fn overlap_skips_windows_before_first_common_observation() {
        let ui = ArrivalSet::new(vec![0.0, 3.0, 6.0, 9.0], 10.0).unwrap();
        let uj = ArrivalSet::new(vec![4.5, 7.0], 10.0).unwrap();
        let k = overlap_expectation(&ui, &uj, 1.0, 10.0).unwrap();
        // usable windows start at 5: [5,6], [6,7], ..., [9,10]
        assert_eq!(k.windows, 5);
    }

    #[test]
    fn strided_overlap_is_close_to_grid_average() {
        let ui = crate::sampling::poisson_arrivals(0.1, 5_000.0, 1).unwrap();
        let uj = crate::sampling::poisson_arrivals(0.1, 5_000.0, 2).unwrap();
        let a = overlap_expectation(&ui, &uj, 10.0, 5_000.0).unwrap();
        let shifted = overlap_expectation_strided(&ui, &uj, 10.0, 5_000.0, 10.0 + 1e-9).unwrap();
        assert!((a.attenuation() - shifted.attenuation()).abs() < 0.02);
        let fine = overlap_expectation_strided(&ui, &uj, 10.0, 5_000.0, 1.0).unwrap();
        assert!((a.attenuation() - fine.attenuation()).abs() < 0.05);
    }

    #[test]
    fn flat_trade_probabilities() {
        assert_eq!(flat_trade_probability(&grid(&[0.0, 1.0, 2.0], 1.0)).unwrap(), 0.0);
        assert_eq!(flat_trade_probability(&grid(&[1.0; 4], 1.0)).unwrap(), 1.0);
        assert_eq!(flat_trade_probability(&grid(&[0.0, 1.0, 1.0, 2.0, 2.0], 1.0)).unwrap(), 0.5);
        assert!(flat_trade_probability(&grid(&[0.0], 1.0)).is_err());
    }

    #[test]
    fn flat_trade_factors() {
        assert_eq!(flat_trade_correction(0.3, 0.0, 0.0, None).unwrap().rho, 0.3);
        let c = flat_trade_correction(0.2, 0.5, 0.5, Some(1.0)).unwrap();
        assert!((c.rho - 0.6).abs() < 1e-15);
        assert!(matches!(
            flat_trade_correction(0.2, 1.0, 0.5, None),
            Err(Error::Saturation(Leg::First))
        ));
    }

    #[test]
    fn poisson_epps_curve() {
        assert!((theoretical_poisson_epps(0.65, 1.0 / 15.0, 15.0) - 0.65 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((theoretical_poisson_epps(0.65, 1.0 / 15.0, 15.0) - 0.239_13).abs() < 1e-5);
        assert!((theoretical_poisson_epps(0.65, 1.0, 1e9) - 0.65).abs() < 1e-8);
        // c * x / 2 + O(x^2) for small x = lambda dt
        let x = 1e-6;
        let v = theoretical_poisson_epps(0.65, 1.0, x);
        assert!((v - 0.65 * x / 2.0).abs() < 0.65 * x * x);
    }
}
