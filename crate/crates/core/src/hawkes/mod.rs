//! Multivariate Hawkes processes with exponential kernels
//! `phi_mn(t) = alpha_mn * exp(-beta_mn * t)`, `t > 0`.
//!
//! Intensities are tracked with per-pair decayed state: between events each pair's excitation
//! decays by `exp(-beta_mn * dt)`, and an event of component `n` adds `alpha_mn` to every
//! `(m, n)` pair. Simulation uses Ogata-style thinning against the total intensity, which is an
//! upper bound until the next event because all kernels are non-increasing.

mod price;

pub use price::{
    hawkes_price_model, limiting_correlation, symmetric_hawkes_covariance, theoretical_hawkes_correlation,
    theoretical_hawkes_covariance, HawkesCovariance, HawkesPriceParams, HawkesPriceRun,
};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::sampling::ArrivalSet;

/// Spectral radii within this distance of 1 are classified quasi-stationary.
pub const CRITICAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HawkesSpec {
    /// Baseline intensities, events per second.
    pub lambda0: Vec<f64>,
    /// Row `m`, column `n`: excitation of component `m` by events of component `n`.
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
}

impl HawkesSpec {
    pub fn new(lambda0: Vec<f64>, alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>) -> Result<Self> {
        let spec = HawkesSpec { lambda0, alpha, beta };
        spec.validate()?;
        Ok(spec)
    }

    /// Two mutually exciting components with no self-excitation.
    pub fn mutual_pair(lambda0: f64, alpha: f64, beta: f64) -> Result<Self> {
        HawkesSpec::new(
            vec![lambda0; 2],
            vec![vec![0.0, alpha], vec![alpha, 0.0]],
            vec![vec![beta; 2]; 2],
        )
    }

    /// Sampling process of the simulation study: `lambda0 = 0.015`, cross kernel
    /// `0.023 exp(-0.11 t)`.
    pub fn paper_sampling() -> Self {
        HawkesSpec::mutual_pair(0.015, 0.023, 0.11).expect("valid constants")
    }

    pub fn dim(&self) -> usize {
        self.lambda0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.dim();
        if m == 0 {
            return Err(Error::param("lambda0", "at least one component required"));
        }
        if self.alpha.len() != m || self.alpha.iter().any(|r| r.len() != m) {
            return Err(Error::param("alpha", format!("must be {m}x{m}")));
        }
        if self.beta.len() != m || self.beta.iter().any(|r| r.len() != m) {
            return Err(Error::param("beta", format!("must be {m}x{m}")));
        }
        for (i, &l) in self.lambda0.iter().enumerate() {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::param(format!("lambda0[{i}]"), "must be finite and >= 0"));
            }
        }
        for i in 0..m {
            for j in 0..m {
                let (a, b) = (self.alpha[i][j], self.beta[i][j]);
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(Error::param(format!("alpha[{i}][{j}]"), "must be finite and >= 0"));
                }
                if a > 0.0 && !(b > 0.0 && b.is_finite()) {
                    return Err(Error::param(
                        format!("beta[{i}][{j}]"),
                        "must be positive where alpha is positive",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Matrix of kernel L1 norms `alpha / beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchingMatrix {
    pub gamma: Vec<Vec<f64>>,
}

impl BranchingMatrix {
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }
}

pub fn branching_matrix(spec: &HawkesSpec) -> BranchingMatrix {
    let gamma = spec
        .alpha
        .iter()
        .zip(&spec.beta)
        .map(|(ar, br)| {
            ar.iter()
                .zip(br)
                .map(|(&a, &b)| if a == 0.0 { 0.0 } else { a / b })
                .collect()
        })
        .collect();
    BranchingMatrix { gamma }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    Stationary,
    QuasiStationary,
    NonStationary,
}

impl std::fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StabilityClass::Stationary => "stationary",
            StabilityClass::QuasiStationary => "quasi-stationary",
            StabilityClass::NonStationary => "non-stationary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub class: StabilityClass,
    pub spectral_radius: f64,
}

/// Classifies by the spectral radius over all complex eigenvalues of `gamma`.
pub fn classify_stability(gamma: &BranchingMatrix) -> Result<Stability> {
    let m = gamma.dim();
    if gamma.gamma.iter().any(|r| r.len() != m) {
        return Err(Error::Shape("branching matrix must be square".into()));
    }
    let radius = if m == 0 {
        0.0
    } else {
        let mat = DMatrix::from_fn(m, m, |i, j| gamma.gamma[i][j]);
        let schur = mat
            .try_schur(f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
        schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    };
    let class = if (radius - 1.0).abs() < CRITICAL_TOLERANCE {
        StabilityClass::QuasiStationary
    } else if radius < 1.0 {
        StabilityClass::Stationary
    } else {
        StabilityClass::NonStationary
    };
    Ok(Stability {
        class,
        spectral_radius: radius,
    })
}

/// Long-run mean intensities `(I - Gamma)^{-1} lambda0` of a stationary process.
pub fn stationary_rates(spec: &HawkesSpec) -> Result<Vec<f64>> {
    let gamma = branching_matrix(spec);
    let m = spec.dim();
    let a = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 } - gamma.gamma[i][j]);
    let b = nalgebra::DVector::from_column_slice(&spec.lambda0);
    a.lu()
        .solve(&b)
        .map(|x| x.iter().copied().collect())
        .ok_or_else(|| Error::Numeric("I - Gamma is singular".into()))
}

struct Link {
    target: usize,
    alpha: f64,
    beta: f64,
}

/// Decayed excitation state of every active `(m, n)` kernel at the current clock.
pub struct IntensityState<'a> {
    spec: &'a HawkesSpec,
    /// Links indexed by the exciting component `n`.
    links_by_source: Vec<Vec<usize>>,
    links: Vec<Link>,
    excitation: Vec<f64>,
    clock: f64,
}

impl<'a> IntensityState<'a> {
    pub fn new(spec: &'a HawkesSpec, start: f64) -> Self {
        let m = spec.dim();
        let mut links = Vec::new();
        let mut links_by_source = vec![Vec::new(); m];
        for (n, by_source) in links_by_source.iter_mut().enumerate() {
            for target in 0..m {
                let alpha = spec.alpha[target][n];
                if alpha > 0.0 {
                    by_source.push(links.len());
                    links.push(Link {
                        target,
                        alpha,
                        beta: spec.beta[target][n],
                    });
                }
            }
        }
        let excitation = vec![0.0; links.len()];
        IntensityState {
            spec,
            links_by_source,
            links,
            excitation,
            clock: start,
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Decays all kernels forward to `t` (no-op when `t` is not later than the clock).
    pub fn advance_to(&mut self, t: f64) {
        let dt = t - self.clock;
        if dt > 0.0 {
            for (e, link) in self.excitation.iter_mut().zip(&self.links) {
                *e *= (-link.beta * dt).exp();
            }
            self.clock = t;
        }
    }

    /// Registers an event of component `n` at the current clock.
    pub fn register(&mut self, n: usize) {
        for &l in &self.links_by_source[n] {
            self.excitation[l] += self.links[l].alpha;
        }
    }

    pub fn intensities_into(&self, out: &mut [f64]) {
        out.copy_from_slice(&self.spec.lambda0);
        for (e, link) in self.excitation.iter().zip(&self.links) {
            out[link.target] += e;
        }
    }

    pub fn intensities(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.spec.dim()];
        self.intensities_into(&mut out);
        out
    }
}

/// Conditional intensity at `t` given the events in `history` strictly before `t`.
pub fn intensity_at(spec: &HawkesSpec, history: &[ArrivalSet], t: f64) -> Result<Vec<f64>> {
    if history.len() != spec.dim() {
        return Err(Error::Shape(format!(
            "history has {} components, spec has {}",
            history.len(),
            spec.dim()
        )));
    }
    let mut events: Vec<(f64, usize)> = history
        .iter()
        .enumerate()
        .flat_map(|(n, set)| set.times().iter().take_while(|&&s| s < t).map(move |&s| (s, n)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let start = events.first().map_or(t, |e| e.0);
    let mut state = IntensityState::new(spec, start);
    for (s, n) in events {
        state.advance_to(s);
        state.register(n);
    }
    state.advance_to(t);
    Ok(state.intensities())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationOptions {
    /// Permit quasi- and non-stationary specifications.
    pub allow_unstable: bool,
}

/// Simulates all components on `[0, horizon]` by thinning.
///
/// A candidate `t + tau` with `tau ~ Exp(I(t))` is accepted when `u ~ U[0, I(t)]` satisfies
/// `u <= I(t + tau)`, and attributed to the component whose cumulative-intensity bucket
/// contains `u`.
pub fn simulate_hawkes(spec: &HawkesSpec, horizon: f64, seed: u64) -> Result<Vec<ArrivalSet>> {
    simulate_hawkes_with(spec, horizon, seed, SimulationOptions::default())
}

pub fn simulate_hawkes_with(
    spec: &HawkesSpec,
    horizon: f64,
    seed: u64,
    options: SimulationOptions,
) -> Result<Vec<ArrivalSet>> {
    spec.validate()?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::param("horizon", "must be finite and >= 0"));
    }
    let stability = classify_stability(&branching_matrix(spec))?;
    if stability.class != StabilityClass::Stationary && !options.allow_unstable {
        return Err(Error::Stability {
            class: stability.class.to_string(),
            radius: stability.spectral_radius,
        });
    }

    let m = spec.dim();
    let mut rng = rng::stream(seed, rng::stream_id(tag::HAWKES, 0, 0));
    let mut times: Vec<Vec<f64>> = vec![Vec::new(); m];
    let mut state = IntensityState::new(spec, 0.0);
    let mut lambda = vec![0.0; m];
    state.intensities_into(&mut lambda);
    let mut bound: f64 = lambda.iter().sum();
    let mut t = 0.0;

    while bound > 0.0 {
        let e: f64 = Exp1.sample(&mut rng);
        let candidate = t + e / bound;
        if candidate > horizon {
            break;
        }
        let u = rng.random::<f64>() * bound;
        state.advance_to(candidate);
        state.intensities_into(&mut lambda);
        t = candidate;

        let mut cumulative = 0.0;
        let mut chosen = None;
        for (i, l) in lambda.iter().enumerate() {
            cumulative += l;
            if u <= cumulative {
                chosen = Some(i);
                break;
            }
        }
        if let Some(i) = chosen {
            // a candidate equal to the previous event time cannot be represented as distinct
            if times[i].last().is_none_or(|&last| candidate > last) {
                times[i].push(candidate);
                state.register(i);
                state.intensities_into(&mut lambda);
            }
        }
        bound = lambda.iter().sum();
    }

    Ok(times
        .into_iter()
        .map(|ts| ArrivalSet::from_sorted(ts, horizon))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn matrix(g: &[&[f64]]) -> BranchingMatrix {
        BranchingMatrix {
            gamma: g.iter().map(|r| r.to_vec()).collect(),
        }
    }

    /// Spectral radius from the growth of `||G^k||`, independent of any eigen-solver.
    ///
    /// Powers are renormalised every step; the mean log growth over the last 6 steps cancels the
    /// constant in `||G^k|| ~ c rho^k` and any rotation of period 1, 2 or 3 among the dominant
    /// eigenvalues.
    fn power_growth_radius(g: &[Vec<f64>]) -> f64 {
        let m = g.len();
        let mut p: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| (i == j) as u8 as f64).collect()).collect();
        let mut growth = Vec::new();
        for _ in 0..600 {
            let mut q = vec![vec![0.0; m]; m];
            for i in 0..m {
                for j in 0..m {
                    q[i][j] = (0..m).map(|l| p[i][l] * g[l][j]).sum();
                }
            }
            let norm = q.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
            if norm == 0.0 {
                return 0.0;
            }
            growth.push(norm.ln());
            p = q.into_iter().map(|r| r.into_iter().map(|x| x / norm).collect()).collect();
        }
        (growth[growth.len() - 6..].iter().sum::<f64>() / 6.0).exp()
    }

    #[test]
    fn branching_of_zero_kernel_is_zero() {
        let spec = HawkesSpec::mutual_pair(0.1, 0.0, 1.0).unwrap();
        let g = branching_matrix(&spec);
        assert!(g.gamma.iter().flatten().all(|&x| x == 0.0));
        let s = classify_stability(&g).unwrap();
        assert_eq!(s.class, StabilityClass::Stationary);
        assert_eq!(s.spectral_radius, 0.0);
    }

    #[test]
    fn branching_of_sampling_spec() {
        let g = branching_matrix(&HawkesSpec::paper_sampling());
        assert_eq!(g.gamma[0][0], 0.0);
        assert!((g.gamma[0][1] - 0.023 / 0.11).abs() < 1e-15);
        assert!((g.gamma[0][1] - 0.209_090_909).abs() < 1e-9);
    }

    #[test]
    fn radius_of_pair_matches_characteristic_polynomial() {
        // eigenvalues of [[0, a], [a, 0]] solve x^2 - a^2 = 0
        let g = branching_matrix(&HawkesSpec::paper_sampling());
        let a = g.gamma[0][1];
        let (tr, det) = (g.gamma[0][0] + g.gamma[1][1], g.gamma[0][0] * g.gamma[1][1] - a * a);
        let disc = (tr * tr - 4.0 * det).sqrt();
        let oracle = ((tr + disc) / 2.0).abs().max(((tr - disc) / 2.0).abs());
        let s = classify_stability(&g).unwrap();
        assert!((s.spectral_radius - oracle).abs() < 1e-12);
        assert!((s.spectral_radius - 0.209_09).abs() < 1e-5);
        assert_eq!(s.class, StabilityClass::Stationary);
    }

    #[test]
    fn radius_of_price_spec() {
        let spec = HawkesPriceParams::paper().spec().unwrap();
        let g = branching_matrix(&spec);
        assert!((g.gamma[0][2] - 0.05 / 0.11).abs() < 1e-15);
        let s = classify_stability(&g).unwrap();
        let oracle = power_growth_radius(&g.gamma);
        assert!((s.spectral_radius - oracle).abs() < 1e-6, "{} vs {oracle}", s.spectral_radius);
        assert!((s.spectral_radius - (0.023 + 0.05) / 0.11).abs() < 1e-12);
        assert!((s.spectral_radius - 0.663_64).abs() < 1e-5);
        assert_eq!(s.class, StabilityClass::Stationary);
    }

    #[test]
    fn complex_eigenvalues_count_toward_radius() {
        // cyclic permutation scaled by 0.9 has eigenvalues 0.9 * cube roots of unity
        let g = matrix(&[&[0.0, 0.9, 0.0], &[0.0, 0.0, 0.9], &[0.9, 0.0, 0.0]]);
        let s = classify_stability(&g).unwrap();
        assert!((s.spectral_radius - 0.9).abs() < 1e-12);
        assert!((power_growth_radius(&g.gamma) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn classification_boundaries() {
        let q = classify_stability(&matrix(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(q.class, StabilityClass::QuasiStationary);
        let n = classify_stability(&matrix(&[&[0.6, 0.6], &[0.6, 0.6]])).unwrap();
        assert_eq!(n.class, StabilityClass::NonStationary);
        assert!(classify_stability(&matrix(&[&[0.0, 1.0]])).is_err());
    }

    #[test]
    fn stationary_rate_of_sampling_spec() {
        let r = stationary_rates(&HawkesSpec::paper_sampling()).unwrap();
        let expected = 0.015 / (1.0 - 0.023 / 0.11);
        for x in r {
            assert!((x - expected).abs() < 1e-12);
            assert!((x - 0.018_966).abs() < 1e-6);
        }
    }

    #[test]
    fn intensity_of_empty_history_is_baseline() {
        let spec = HawkesSpec::paper_sampling();
        let h = vec![ArrivalSet::empty(10.0), ArrivalSet::empty(10.0)];
        assert_eq!(intensity_at(&spec, &h, 5.0).unwrap(), vec![0.015, 0.015]);
    }

    #[test]
    fn single_event_decays_by_one_e_fold() {
        let spec = HawkesSpec::paper_sampling();
        let s = 2.0;
        let h = vec![ArrivalSet::empty(100.0), ArrivalSet::new(vec![s], 100.0).unwrap()];
        let t = s + 1.0 / 0.11;
        let l = intensity_at(&spec, &h, t).unwrap();
        assert!((l[0] - (0.015 + 0.023 * (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(l[1], 0.015);
        // events at or after t are ignored
        let at = intensity_at(&spec, &h, s).unwrap();
        assert_eq!(at, vec![0.015, 0.015]);
    }

    #[test]
    fn recursion_matches_brute_force_history_sum() {
        let spec = HawkesSpec::new(
            vec![0.2, 0.1, 0.3],
            vec![vec![0.1, 0.4, 0.0], vec![0.2, 0.0, 0.5], vec![0.05, 0.3, 0.2]],
            vec![vec![1.0, 2.0, 1.0], vec![0.5, 1.0, 3.0], vec![0.7, 0.9, 1.5]],
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let horizon = 500.0;
            let history: Vec<ArrivalSet> = (0..3)
                .map(|_| {
                    let mut ts: Vec<f64> = (0..333).map(|_| rng.random::<f64>() * horizon).collect();
                    ts.sort_by(f64::total_cmp);
                    ts.dedup();
                    ArrivalSet::new(ts, horizon).unwrap()
                })
                .collect();
            let t = rng.random::<f64>() * horizon;
            let fast = intensity_at(&spec, &history, t).unwrap();
            for (m, &fast_m) in fast.iter().enumerate() {
                let mut brute = spec.lambda0[m];
                for (n, set) in history.iter().enumerate() {
                    for &s in set.times() {
                        if s < t {
                            brute += spec.alpha[m][n] * (-spec.beta[m][n] * (t - s)).exp();
                        }
                    }
                }
                assert!((fast_m - brute).abs() < 1e-10, "{fast_m} vs {brute}");
                assert!(fast_m >= spec.lambda0[m]);
            }
        }
    }

    #[test]
    fn zero_horizon_gives_empty_sets() {
        let out = simulate_hawkes(&HawkesSpec::paper_sampling(), 0.0, 1).unwrap();
        assert!(out.iter().all(|s| s.is_empty()));
    }

    #[test]
    fn unstable_spec_is_rejected_unless_overridden() {
        let spec = HawkesSpec::mutual_pair(0.1, 1.2, 1.0).unwrap();
        assert!(matches!(simulate_hawkes(&spec, 10.0, 1), Err(Error::Stability { .. })));
        let opts = SimulationOptions { allow_unstable: true };
        let out = simulate_hawkes_with(&spec, 10.0, 1, opts).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn simulation_is_deterministic_and_monotone() {
        let spec = HawkesSpec::paper_sampling();
        let a = simulate_hawkes(&spec, 5_000.0, 3).unwrap();
        let b = simulate_hawkes(&spec, 5_000.0, 3).unwrap();
        assert_eq!(a, b);
        for set in &a {
            assert!(set.times().windows(2).all(|w| w[0] < w[1]));
            assert!(set.times().iter().all(|&t| (0.0..=5_000.0).contains(&t)));
        }
    }

    #[test]
    fn sampling_spec_long_run_rate() {
        let spec = HawkesSpec::paper_sampling();
        let mut total = [0usize; 2];
        let horizon = 72_000.0;
        let seeds = 10;
        for seed in 0..seeds {
            let sets = simulate_hawkes(&spec, horizon, seed).unwrap();
            for i in 0..2 {
                total[i] += sets[i].len();
            }
        }
        let expected = 0.015 / (1.0 - 0.023 / 0.11);
        for c in total {
            let rate = c as f64 / (horizon * seeds as f64);
            assert!((rate - expected).abs() / expected < 0.05, "{rate} vs {expected}");
        }
    }
}
