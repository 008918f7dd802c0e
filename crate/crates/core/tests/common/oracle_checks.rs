#![allow(dead_code)]

//! Fast paths checked against direct definitions on randomised inputs.
//!
//! Each check returns a one-line summary on success and the first discrepancy on failure.

use epps_core::estimators::{hayashi_yoshida_covariance, realised_covariance};
use epps_core::hawkes::{simulate_hawkes, HawkesSpec, IntensityState};
use epps_core::sampling::{poisson_arrivals, ArrivalSet, GridSeries, TickSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

fn random_ticks(rng: &mut ChaCha8Rng, horizon: f64, n: usize, grid: bool) -> TickSeries {
    let mut times: Vec<f64> = (0..n)
        .map(|_| {
            let t = rng.random::<f64>() * horizon;
            if grid { t.round() } else { t }
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut level = 0.0;
    let values = times
        .iter()
        .map(|_| {
            level += rng.random::<f64>() - 0.5;
            level
        })
        .collect();
    TickSeries::new(ArrivalSet::new(times, horizon).unwrap(), values).unwrap()
}

/// Sum over every pair of return intervals `(a, b]`, `(c, d]` that intersect.
fn brute_force_hy(si: &TickSeries, sj: &TickSeries) -> f64 {
    let (ti, tj, xi, xj) = (si.times(), sj.times(), si.values(), sj.values());
    let mut sum = 0.0;
    for l in 1..ti.len() {
        for k in 1..tj.len() {
            if ti[l - 1].max(tj[k - 1]) < ti[l].min(tj[k]) {
                sum += (xi[l] - xi[l - 1]) * (xj[k] - xj[k - 1]);
            }
        }
    }
    sum
}

pub fn hayashi_yoshida_vs_brute_force() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    while cases < 200 {
        // every fourth case puts ticks on a coarse integer grid to force shared endpoints
        let grid = cases % 4 == 0;
        let horizon = if grid { 60.0 } else { 1000.0 };
        let (ni, nj) = (rng.random_range(2..80), rng.random_range(2..80));
        let si = random_ticks(&mut rng, horizon, ni, grid);
        let sj = random_ticks(&mut rng, horizon, nj, grid);
        if si.len() < 2 || sj.len() < 2 {
            continue;
        }
        let diff = (hayashi_yoshida_covariance(&si, &sj) - brute_force_hy(&si, &sj)).abs();
        if !(diff <= 1e-12) {
            return Err(format!("case {cases}: |sweep - brute force| = {diff:e}"));
        }
        worst = worst.max(diff);
        cases += 1;
    }
    Ok(format!("HY sweep vs brute force: {cases} cases, max diff {worst:.1e}"))
}

pub fn realised_covariance_vs_naive() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let n = rng.random_range(2..500);
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut naive = 0.0;
        for h in 1..n {
            naive += (a[h] - a[h - 1]) * (b[h] - b[h - 1]);
        }
        let fast = realised_covariance(&GridSeries { dt: 1.0, values: a }, &GridSeries { dt: 1.0, values: b })
            .map_err(|e| e.to_string())?;
        let diff = (fast - naive).abs();
        if !(diff <= 1e-12) {
            return Err(format!("case {case}: |RV - naive| = {diff:e}"));
        }
        worst = worst.max(diff);
    }
    Ok(format!("RV vs naive loop: 200 cases, max diff {worst:.1e}"))
}

pub fn intensity_recursion_vs_history_sum() -> Check {
    let spec = HawkesSpec::new(
        vec![0.1, 0.05, 0.2],
        vec![vec![0.3, 0.1, 0.0], vec![0.2, 0.0, 0.4], vec![0.0, 0.25, 0.1]],
        vec![vec![1.0, 0.5, 2.0], vec![0.8, 1.5, 0.7], vec![1.2, 0.9, 3.0]],
    )
    .map_err(|e| e.to_string())?;
    let history = simulate_hawkes(&spec, 2_000.0, 5).map_err(|e| e.to_string())?;
    let mut events: Vec<(f64, usize)> = history
        .iter()
        .enumerate()
        .flat_map(|(n, s)| s.times().iter().map(move |&t| (t, n)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    if events.len() < 500 {
        return Err(format!("only {} events simulated", events.len()));
    }

    let mut state = IntensityState::new(&spec, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut worst: f64 = 0.0;
    for (idx, &(t, n)) in events.iter().enumerate() {
        // probe somewhere between the previous event and this one, then at the event itself
        let prev = if idx == 0 { 0.0 } else { events[idx - 1].0 };
        for probe in [prev + rng.random::<f64>() * (t - prev), t] {
            state.advance_to(probe);
            for (m, &lambda) in state.intensities().iter().enumerate() {
                let mut direct = spec.lambda0[m];
                for &(s, k) in &events[..idx] {
                    direct += spec.alpha[m][k] * (-spec.beta[m][k] * (probe - s)).exp();
                }
                let diff = (lambda - direct).abs();
                if !(diff <= 1e-10) {
                    return Err(format!("t={probe} m={m}: {lambda} vs {direct}"));
                }
                worst = worst.max(diff);
            }
        }
        state.register(n);
    }
    Ok(format!(
        "intensity recursion vs history sum: {} probes, max diff {worst:.1e}",
        2 * events.len()
    ))
}

/// Asymptotic Kolmogorov tail with the small-sample correction of Stephens.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

fn ks_exponential(times: &[f64], rate: f64) -> f64 {
    let mut gaps: Vec<f64> = std::iter::once(times[0])
        .chain(times.windows(2).map(|w| w[1] - w[0]))
        .collect();
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    let d = gaps
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let f = 1.0 - (-rate * g).exp();
            (f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f)
        })
        .fold(0.0, f64::max);
    ks_p_value(d, n)
}

/// At the 1% level 50 independent tests reject more than three times with probability 0.0016.
pub const MAX_REJECTIONS: usize = 3;

pub fn poisson_interarrivals_ks() -> Check {
    let rate = 1.0 / 15.0;
    let rejections = (0..50u64)
        .filter(|&seed| ks_exponential(poisson_arrivals(rate, 30_000.0, seed).unwrap().times(), rate) < 0.01)
        .count();
    let summary = format!("Poisson KS at 1%: {rejections}/50 seeds rejected");
    if rejections <= MAX_REJECTIONS {
        Ok(summary)
    } else {
        Err(summary)
    }
}

/// Per-component KS over 50 seeds for a two-component process with no excitation.
pub fn unexcited_hawkes_ks() -> Check {
    let spec = HawkesSpec::new(vec![0.05, 0.2], vec![vec![0.0; 2]; 2], vec![vec![1.0; 2]; 2]).map_err(|e| e.to_string())?;
    let mut rejections = [0usize; 2];
    for seed in 0..50u64 {
        let sets = simulate_hawkes(&spec, 20_000.0, seed).map_err(|e| e.to_string())?;
        for (m, (set, &rate)) in sets.iter().zip(&spec.lambda0).enumerate() {
            if ks_exponential(set.times(), rate) < 0.01 {
                rejections[m] += 1;
            }
        }
    }
    let summary = format!(
        "thinning with alpha=0 KS at 1%: {}/50 and {}/50 seeds rejected",
        rejections[0], rejections[1]
    );
    if rejections.iter().all(|&r| r <= MAX_REJECTIONS) {
        Ok(summary)
    } else {
        Err(summary)
    }
}
