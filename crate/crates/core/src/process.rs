//! Stationary beta Jacobi process: discretized particle SDE, moment and
//! fluctuation processes, martingale extraction and Ornstein–Uhlenbeck
//! diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_tridiagonal, ModelParams};
use crate::error::{Error, Result};
use crate::exact_moments::{mean_moment, ExactParams};
use crate::limit_measure::{moments_u, LimitParams};
use crate::orthopoly::orthonormal_primitives;
use crate::poly::Poly;
use crate::rng::RandomStream;
use crate::stats::{correlation, linear_fit, Summary};

pub const DEFAULT_BOUNDARY_EPS: f64 = 1e-12;
pub const DEFAULT_COLLISION_EPS: f64 = 1e-10;
pub const MAX_DT: f64 = 1e-3;

/// How the pairwise repulsion enters a time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Plain Euler–Maruyama on the drift as written, gaps floored at
    /// `collision_eps`.
    Euler,
    /// Euler–Maruyama for everything except the singular part of each pair's
    /// repulsion, which follows the exact two-body flow `g² ↦ g² + 4βw̄ dt`.
    PairFlow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub params: ModelParams,
    pub horizon: f64,
    pub dt: f64,
    pub boundary_eps: f64,
    pub collision_eps: f64,
    /// Keep every `record_stride`-th state.
    pub record_stride: usize,
    pub keep_increments: bool,
    pub scheme: Scheme,
    /// Switches for the deterministic test variants.
    pub noise: bool,
    pub interaction: bool,
}

impl ProcessConfig {
    pub fn new(params: ModelParams, horizon: f64, dt: f64) -> Result<Self> {
        let c = Self {
            params,
            horizon,
            dt,
            boundary_eps: DEFAULT_BOUNDARY_EPS,
            collision_eps: DEFAULT_COLLISION_EPS,
            record_stride: 1,
            keep_increments: false,
            scheme: Scheme::PairFlow,
            noise: true,
            interaction: true,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for (name, v) in [("a", self.params.a), ("b", self.params.b)] {
            if v <= -0.5 {
                return Err(Error::Parameter { name, value: v, reason: "the process needs a, b > -1/2" });
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Parameter { name: "T", value: self.horizon, reason: "must be positive" });
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::Parameter { name: "dt", value: self.dt, reason: "must lie in (0, 1e-3]" });
        }
        if !(self.boundary_eps > 0.0 && self.boundary_eps <= 1e-8) {
            return Err(Error::Parameter {
                name: "boundary_eps",
                value: self.boundary_eps,
                reason: "must lie in (0, 1e-8]",
            });
        }
        if !(self.collision_eps > 0.0) {
            return Err(Error::Parameter { name: "collision_eps", value: self.collision_eps, reason: "must be positive" });
        }
        if self.record_stride == 0 {
            return Err(Error::Parameter { name: "record_stride", value: 0.0, reason: "must be at least 1" });
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessPath {
    pub times: Vec<f64>,
    /// Sorted particle positions at each recorded time.
    pub states: Vec<Vec<f64>>,
    /// `ΔB_i` of every step, indexed by step then particle, when kept.
    pub increments: Option<Vec<Vec<f64>>>,
    pub dt: f64,
    pub record_stride: usize,
}

/// Initial configuration drawn from the ensemble itself.
pub fn stationary_initial_state(params: &ModelParams, rng: &mut RandomStream) -> Result<Vec<f64>> {
    let j = sample_tridiagonal(params, rng)?;
    Ok(j.eig_with_first_components(params.n)?.eigenvalues)
}

/// Stationary run: the initial state and the Brownian motion use independent
/// substreams of `rng`.
pub fn simulate(config: &ProcessConfig, rng: &RandomStream) -> Result<ProcessPath> {
    let init = stationary_initial_state(&config.params, &mut rng.substream(0))?;
    simulate_from(config, init, &mut rng.substream(1))
}

/// Drift of every particle under `config.scheme`, written into `out`.
fn drift(config: &ProcessConfig, x: &[f64], out: &mut [f64]) {
    let ModelParams { a, b, beta, .. } = config.params;
    let n = x.len();
    for (o, &xi) in out.iter_mut().zip(x) {
        *o = a + 1.0 - (a + b + 2.0) * xi;
    }
    if !config.interaction || n < 2 {
        return;
    }
    match config.scheme {
        Scheme::Euler => {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    if j != i {
                        let g = x[i] - x[j];
                        let g = if g.abs() < config.collision_eps { config.collision_eps.copysign(g) } else { g };
                        acc += 1.0 / g;
                    }
                }
                out[i] += beta * x[i] * (1.0 - x[i]) * acc;
            }
        }
        Scheme::PairFlow => {
            // For x_i ≤ x_j with gap g: β w_i/(x_i − x_j) = −β w̄/g + β(1 − x_i − x_j)/2,
            // and the mirror image for j.
            let dt = config.dt;
            for i in 0..n {
                let wi = x[i] * (1.0 - x[i]);
                for j in i + 1..n {
                    let wj = x[j] * (1.0 - x[j]);
                    let g = (x[j] - x[i]).max(config.collision_eps);
                    let wbar = 0.5 * (wi + wj);
                    let push = 2.0 * beta * wbar / ((g * g + 4.0 * beta * wbar * dt).sqrt() + g);
                    let common = 0.5 * beta * (1.0 - x[i] - x[j]);
                    out[i] += common - push;
                    out[j] += common + push;
                }
            }
        }
    }
}

/// Run from a given configuration, which is sorted and clamped first.
pub fn simulate_from(config: &ProcessConfig, initial: Vec<f64>, rng: &mut RandomStream) -> Result<ProcessPath> {
    config.validate()?;
    if initial.len() != config.params.n {
        return Err(Error::Domain(format!(
            "initial state has {} particles, expected {}",
            initial.len(),
            config.params.n
        )));
    }
    let (lo, hi) = (config.boundary_eps, 1.0 - config.boundary_eps);
    let mut x = initial;
    for v in &mut x {
        if !v.is_finite() {
            return Err(Error::NonFinite { step: 0 });
        }
        *v = v.clamp(lo, hi);
    }
    x.sort_by(f64::total_cmp);

    let steps = config.steps();
    let n = x.len();
    let sqrt_dt = config.dt.sqrt();
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let mut increments = config.keep_increments.then(|| Vec::with_capacity(steps));
    let mut d = vec![0.0; n];
    let mut db = vec![0.0; n];

    for step in 1..=steps {
        drift(config, &x, &mut d);
        for v in db.iter_mut() {
            *v = if config.noise { sqrt_dt * rng.standard_normal() } else { 0.0 };
        }
        for i in 0..n {
            let diffusion = (2.0 * x[i] * (1.0 - x[i])).sqrt();
            let next = x[i] + d[i] * config.dt + diffusion * db[i];
            if !next.is_finite() {
                return Err(Error::NonFinite { step });
            }
            x[i] = next.clamp(lo, hi);
        }
        x.sort_by(f64::total_cmp);
        debug_assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        if let Some(inc) = increments.as_mut() {
            inc.push(db.clone());
        }
        if step % config.record_stride == 0 {
            times.push(step as f64 * config.dt);
            states.push(x.clone());
        }
    }
    Ok(ProcessPath { times, states, increments, dt: config.dt, record_stride: config.record_stride })
}

/// `S_k(t) = (1/N) Σ λ_i(t)^k` on the recorded grid.
pub fn moment_process(path: &ProcessPath, k: u32) -> Vec<f64> {
    path.states
        .iter()
        .map(|s| s.iter().map(|v| v.powi(k as i32)).sum::<f64>() / s.len() as f64)
        .collect()
}

/// `⟨μ, f⟩` for an empirical configuration.
pub fn empirical_mean(state: &[f64], f: &Poly) -> f64 {
    state.iter().map(|&v| f.eval(v)).sum::<f64>() / state.len() as f64
}

/// `√N (⟨μ_t, P⟩ − ⟨ν_c, P⟩)` on the recorded grid.
pub fn fluctuation_process(path: &ProcessPath, p: &Poly, params: LimitParams) -> Vec<f64> {
    let centre = if p.is_zero() { 0.0 } else { p.integrate(moments_u(params, p.coeffs().len()).values()) };
    path.states
        .iter()
        .map(|s| {
            let v = empirical_mean(s, p) - centre;
            // Constants are reproduced exactly.
            let v = if p.degree().is_none_or(|d| d == 0) { 0.0 } else { v };
            (s.len() as f64).sqrt() * v
        })
        .collect()
}

/// Drift of `⟨μ, f⟩` from Itô's formula, with the interaction written as a
/// divided difference:
/// `(1/N) Σ [f′(a+1−(a+b+2)x) + f″ x(1−x)] + (β/2N) Σ_{i≠j} (g(λ_i)−g(λ_j))/(λ_i−λ_j)`,
/// `g = x(1−x) f′`.
pub fn measure_drift(state: &[f64], f: &Poly, params: &ModelParams) -> f64 {
    let ModelParams { a, b, beta, .. } = *params;
    let n = state.len() as f64;
    let f1 = f.derivative();
    let f2 = f1.derivative();
    let g = &Poly::new(vec![0.0, 1.0, -1.0]) * &f1;
    let single: f64 = state
        .iter()
        .map(|&x| f1.eval(x) * (a + 1.0 - (a + b + 2.0) * x) + f2.eval(x) * x * (1.0 - x))
        .sum::<f64>()
        / n;
    // (g(x) − g(y))/(x − y) as a bivariate polynomial evaluated pairwise.
    let gc = g.coeffs();
    let mut pair = 0.0;
    for (i, &x) in state.iter().enumerate() {
        for &y in &state[i + 1..] {
            let mut dd = 0.0;
            for (k, &ck) in gc.iter().enumerate().skip(1) {
                let mut s = 0.0;
                let mut xp = 1.0;
                for j in 0..k {
                    s += xp * y.powi((k - 1 - j) as i32);
                    xp *= x;
                }
                dd += ck * s;
            }
            pair += 2.0 * dd;
        }
    }
    single + beta / (2.0 * n) * pair
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvReport {
    /// `Σ (ΔM)²` with `ΔM = Δ⟨μ,f⟩ − drift·dt`.
    pub realized: f64,
    /// `(1/N) ∫ ⟨μ_s, 2x(1−x) f′²⟩ ds` by the left-point rule.
    pub predicted: f64,
    pub relative_error: f64,
    /// `Σ ((1/N) Σ_i f′(λ_i) √(2λ_i(1−λ_i)) ΔB_i)²` from the stored increments.
    pub from_increments: f64,
}

/// Compares the realized quadratic variation of the reconstructed martingale
/// with its predicted bracket. Needs every step recorded and the increments.
pub fn martingale_qv_check(path: &ProcessPath, f: &Poly, params: &ModelParams) -> Result<QvReport> {
    let inc = path
        .increments
        .as_ref()
        .ok_or_else(|| Error::Contract("path was simulated without Brownian increments".into()))?;
    if path.record_stride != 1 || inc.len() + 1 != path.states.len() {
        return Err(Error::Contract("quadratic variation needs every step recorded".into()));
    }
    let n = params.n as f64;
    let f1 = f.derivative();
    let (mut realized, mut predicted, mut direct) = (0.0, 0.0, 0.0);
    for (step, db) in inc.iter().enumerate() {
        let (s0, s1) = (&path.states[step], &path.states[step + 1]);
        let dm = empirical_mean(s1, f) - empirical_mean(s0, f) - measure_drift(s0, f, params) * path.dt;
        realized += dm * dm;
        let bracket: f64 = s0.iter().map(|&x| 2.0 * x * (1.0 - x) * f1.eval(x).powi(2)).sum::<f64>() / n;
        predicted += bracket / n * path.dt;
        let dd: f64 = s0
            .iter()
            .zip(db)
            .map(|(&x, &b)| f1.eval(x) * (2.0 * x * (1.0 - x)).sqrt() * b)
            .sum::<f64>()
            / n;
        direct += dd * dd;
    }
    let relative_error = if predicted == 0.0 { realized } else { (realized - predicted).abs() / predicted };
    Ok(QvReport { realized, predicted, relative_error, from_increments: direct })
}

/// Replica experiment for stationarity and Ornstein–Uhlenbeck structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessExperiment {
    pub config: ProcessConfig,
    pub replicas: usize,
    pub seed: u64,
    /// Moments `S_1..S_kmax` checked for stationarity.
    pub kmax: u32,
    /// Fluctuations of `P̃_0..P̃_{n_max}`.
    pub n_max: usize,
    /// Largest lag used for autocovariances.
    pub max_lag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityRow {
    pub k: u32,
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// Exact finite-`N` ensemble moment, the stationary mean of `S_k`.
    pub exact_mean: f64,
    pub limit_mean: f64,
    /// Largest pairwise |difference| / SE of the difference across times.
    pub max_time_z: f64,
    /// Largest |mean − exact_mean| / SE.
    pub max_exact_z: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: usize,
    pub gamma_n: f64,
    pub fitted_rate: f64,
    pub relative_error: f64,
    pub variance: f64,
    pub lags: Vec<f64>,
    pub autocovariance: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRow {
    pub m: usize,
    pub n: usize,
    pub time: f64,
    pub correlation: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessReport {
    pub experiment: ProcessExperiment,
    pub stationarity: Vec<StationarityRow>,
    pub decay: Vec<DecayRow>,
    pub cross: Vec<CrossRow>,
    pub passed: bool,
}

/// Relative tolerance on fitted decay rates.
pub const DECAY_TOLERANCE: f64 = 0.15;
/// Autocovariances below this fraction of the variance are left out of the fit.
pub const DECAY_FIT_FLOOR: f64 = 0.2;

/// Recorded moment processes `S_1..S_kmax` of one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaMoments {
    pub times: Vec<f64>,
    /// `moments[k − 1][i] = S_k(times[i])`.
    pub moments: Vec<Vec<f64>>,
}

struct ReplicaSeries {
    moments: ReplicaMoments,
    fluct: Vec<Vec<f64>>,
}

fn checkpoints(len: usize) -> Vec<usize> {
    let mut v = vec![0, (len - 1) / 2, len - 1];
    v.dedup();
    v
}

/// Runs `replicas` independent stationary paths and summarizes them.
pub fn run_process_experiment(exp: &ProcessExperiment) -> Result<ProcessReport> {
    run_process_experiment_with_moments(exp).map(|(report, _)| report)
}

/// As [`run_process_experiment`], also returning every replica's moment
/// processes in replica order.
pub fn run_process_experiment_with_moments(exp: &ProcessExperiment) -> Result<(ProcessReport, Vec<ReplicaMoments>)> {
    if exp.replicas < 2 {
        return Err(Error::Parameter { name: "replicas", value: exp.replicas as f64, reason: "need at least 2" });
    }
    let config = exp.config;
    let p = config.params;
    let limit = LimitParams::new(p.a, p.b, p.c)?;
    let prims = orthonormal_primitives(limit, exp.n_max + 1)?;
    let root = RandomStream::new(exp.seed);

    let series: Vec<ReplicaSeries> = (0..exp.replicas)
        .into_par_iter()
        .map(|r| {
            let path = simulate(&config, &root.substream(r as u64))?;
            let moments = (1..=exp.kmax).map(|k| moment_process(&path, k)).collect();
            let fluct = prims.iter().map(|pp| fluctuation_process(&path, pp, limit)).collect();
            Ok(ReplicaSeries { moments: ReplicaMoments { times: path.times.clone(), moments }, fluct })
        })
        .collect::<Result<_>>()?;

    let record_dt = config.dt * config.record_stride as f64;
    let grid_len = series[0].fluct[0].len();
    let cps = checkpoints(grid_len);
    let check_times: Vec<f64> = cps.iter().map(|&i| i as f64 * record_dt).collect();
    let m = exp.replicas as f64;

    let exact_params = ExactParams::new(
        to_rational(p.n as f64)?,
        to_rational(p.beta / 2.0)?,
        to_rational(p.a)?,
        to_rational(p.b)?,
    );
    let u = moments_u(limit, exp.kmax as usize);
    let mut stationarity = Vec::new();
    for k in 1..=exp.kmax {
        let mut means = Vec::new();
        let mut ses = Vec::new();
        for t in 0..cps.len() {
            let xs: Vec<f64> = series.iter().map(|s| s.moments.moments[k as usize - 1][cps[t]]).collect();
            let sm = Summary::from_slice(&xs);
            means.push(sm.mean);
            ses.push(sm.standard_error());
        }
        let exact_mean = num_traits::ToPrimitive::to_f64(&mean_moment(k as usize, &exact_params)?).unwrap_or(f64::NAN);
        let mut max_time_z: f64 = 0.0;
        for i in 0..means.len() {
            for j in i + 1..means.len() {
                let se = (ses[i].powi(2) + ses[j].powi(2)).sqrt();
                max_time_z = max_time_z.max((means[i] - means[j]).abs() / se);
            }
        }
        let max_exact_z = means
            .iter()
            .zip(&ses)
            .map(|(mu, se)| (mu - exact_mean).abs() / se)
            .fold(0.0, f64::max);
        stationarity.push(StationarityRow {
            k,
            times: check_times.clone(),
            means,
            standard_errors: ses,
            exact_mean,
            limit_mean: u.get(k as usize),
            max_time_z,
            max_exact_z,
            passed: max_time_z <= 4.0 && max_exact_z <= 4.0,
        });
    }

    let max_lag_steps = ((exp.max_lag / record_dt).round() as usize).min(grid_len - 1);
    let mut decay = Vec::new();
    for n in 0..=exp.n_max {
        let paths: Vec<&[f64]> = series.iter().map(|s| s.fluct[n].as_slice()).collect();
        let (lags, acov) = autocovariance(&paths, max_lag_steps, record_dt);
        let gamma_n = limit.gamma(n);
        let fitted_rate = fit_decay_rate(&lags, &acov);
        let relative_error = (fitted_rate - gamma_n).abs() / gamma_n;
        decay.push(DecayRow {
            n,
            gamma_n,
            fitted_rate,
            relative_error,
            variance: acov[0],
            lags,
            autocovariance: acov,
            passed: relative_error <= DECAY_TOLERANCE,
        });
    }

    let bound = 4.0 / m.sqrt();
    let mut cross = Vec::new();
    for i in 0..=exp.n_max {
        for j in i + 1..=exp.n_max {
            for (ti, &idx) in cps.iter().enumerate() {
                let xs: Vec<f64> = series.iter().map(|s| s.fluct[i][idx]).collect();
                let ys: Vec<f64> = series.iter().map(|s| s.fluct[j][idx]).collect();
                let rho = correlation(&xs, &ys);
                cross.push(CrossRow { m: i, n: j, time: check_times[ti], correlation: rho, bound, passed: rho.abs() <= bound });
            }
        }
    }

    let passed = stationarity.iter().all(|r| r.passed) && decay.iter().all(|r| r.passed) && cross.iter().all(|r| r.passed);
    let report = ProcessReport { experiment: *exp, stationarity, decay, cross, passed };
    Ok((report, series.into_iter().map(|s| s.moments).collect()))
}

fn to_rational(v: f64) -> Result<num_rational::BigRational> {
    num_rational::BigRational::from_float(v).ok_or_else(|| Error::Domain(format!("{v} is not finite")))
}

/// Stationary autocovariance pooled over replicas and time origins, centred
/// at the pooled mean.
pub fn autocovariance(paths: &[&[f64]], max_lag: usize, record_dt: f64) -> (Vec<f64>, Vec<f64>) {
    let total: usize = paths.iter().map(|p| p.len()).sum();
    let mean = paths.iter().flat_map(|p| p.iter()).sum::<f64>() / total as f64;
    let mut lags = Vec::with_capacity(max_lag + 1);
    let mut acov = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let mut sum = 0.0;
        let mut count = 0usize;
        for p in paths {
            for t in 0..p.len().saturating_sub(lag) {
                sum += (p[t] - mean) * (p[t + lag] - mean);
                count += 1;
            }
        }
        lags.push(lag as f64 * record_dt);
        acov.push(sum / count as f64);
    }
    (lags, acov)
}

/// Least-squares slope of `−log C(τ)` over the lags before `C` first drops
/// below `DECAY_FIT_FLOOR · C(0)`.
pub fn fit_decay_rate(lags: &[f64], acov: &[f64]) -> f64 {
    let floor = DECAY_FIT_FLOOR * acov[0];
    let cut = acov.iter().position(|&c| c < floor).unwrap_or(acov.len());
    if cut < 2 {
        return f64::NAN;
    }
    let ys: Vec<f64> = acov[..cut].iter().map(|c| c.ln()).collect();
    let (_, slope) = linear_fit(&lags[..cut], &ys);
    -slope
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(a: f64, b: f64, c: f64, n: usize, horizon: f64, dt: f64) -> ProcessConfig {
        ProcessConfig::new(ModelParams::new(a, b, c, n).unwrap(), horizon, dt).unwrap()
    }

    #[test]
    fn config_validation() {
        let p = ModelParams::new(-0.6, 0.0, 1.0, 3).unwrap();
        assert!(ProcessConfig::new(p, 1.0, 1e-4).is_err());
        let p = ModelParams::new(0.0, 0.0, 1.0, 3).unwrap();
        assert!(ProcessConfig::new(p, 1.0, 1e-2).is_err());
        assert!(ProcessConfig::new(p, 0.0, 1e-4).is_err());
        let mut c = ProcessConfig::new(p, 1.0, 1e-4).unwrap();
        c.boundary_eps = 1e-6;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_noise_relaxation() {
        for scheme in [Scheme::Euler, Scheme::PairFlow] {
            // Euler's global error here is at most t·dt·2·0.2·e^{−2t} ≈ 7e−7.
            let mut c = config(0.0, 0.0, 1.0, 1, 1.0, 1e-5);
            c.noise = false;
            c.interaction = false;
            c.scheme = scheme;
            c.record_stride = 1000;
            let path = simulate_from(&c, vec![0.7], &mut RandomStream::new(1)).unwrap();
            for (t, s) in path.times.iter().zip(&path.states) {
                let exact = 0.5 + 0.2 * (-2.0 * t).exp();
                assert!((s[0] - exact).abs() <= 1e-6, "t={t}");
            }
        }
    }

    #[test]
    fn single_particle_stationary_mean() {
        let mut c = config(0.0, 0.0, 1.0, 1, 200.0, 1e-3);
        c.record_stride = 10;
        let path = simulate(&c, &RandomStream::new(8)).unwrap();
        let s1 = moment_process(&path, 1);
        assert_eq!(s1, path.states.iter().map(|s| s[0]).collect::<Vec<_>>());
        let mean = s1.iter().sum::<f64>() / s1.len() as f64;
        // Correlation time 1/2; Var λ = 1/12 under Beta(1,1).
        let se = (1.0f64 / 12.0 * 2.0 * 0.5 / 200.0).sqrt();
        assert!((mean - 0.5).abs() <= 4.0 * se, "{mean}");
        assert!(moment_process(&path, 0).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn paths_stay_sorted_in_unit_interval() {
        for scheme in [Scheme::Euler, Scheme::PairFlow] {
            let mut c = config(-0.4, 0.3, 0.5, 12, 0.5, 1e-3);
            c.scheme = scheme;
            let path = simulate(&c, &RandomStream::new(4)).unwrap();
            for s in &path.states {
                assert!(s.windows(2).all(|w| w[0] <= w[1]));
                assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let c = config(0.0, 0.0, 1.0, 10, 0.2, 1e-3);
        let a = simulate(&c, &RandomStream::new(42)).unwrap();
        let b = simulate(&c, &RandomStream::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pair_flow_matches_euler_for_separated_pairs() {
        let mut c = config(0.0, 0.0, 1.0, 3, 1.0, 1e-6);
        let x = [0.2, 0.5, 0.7];
        let mut e = [0.0; 3];
        let mut f = [0.0; 3];
        c.scheme = Scheme::Euler;
        drift(&c, &x, &mut e);
        c.scheme = Scheme::PairFlow;
        drift(&c, &x, &mut f);
        for i in 0..3 {
            assert!((e[i] - f[i]).abs() <= 1e-5 * e[i].abs().max(1.0));
        }
    }

    #[test]
    fn pair_flow_two_body_gap_is_exact() {
        // Without noise and the confining drift's difference, g² grows by 4βw̄ dt.
        let mut c = config(0.0, 0.0, 1.0, 2, 1e-3, 1e-3);
        c.scheme = Scheme::PairFlow;
        let x = [0.5 - 1e-6, 0.5 + 1e-6];
        let mut d = [0.0; 2];
        drift(&c, &x, &mut d);
        let g_new = (x[1] + d[1] * c.dt) - (x[0] + d[0] * c.dt);
        let wbar = 0.5 * (x[0] * (1.0 - x[0]) + x[1] * (1.0 - x[1]));
        let beta = c.params.beta;
        // The confining drift contracts the gap at rate (a+b+2) = 2, and the
        // bounded pair term adds nothing to it.
        let expected = (4e-12 + 4.0 * beta * wbar * c.dt).sqrt() - 2.0 * 2e-6 * c.dt;
        assert!((g_new - expected).abs() <= 1e-15, "{g_new} vs {expected}");
    }

    #[test]
    fn measure_drift_matches_direct_sum() {
        let p = ModelParams::new(0.3, -0.2, 1.5, 5).unwrap();
        let x = [0.1, 0.25, 0.4, 0.75, 0.9];
        let f = Poly::new(vec![0.2, -0.4, 1.1, 0.6]);
        let f1 = f.derivative();
        let f2 = f1.derivative();
        let mut direct = 0.0;
        for i in 0..5 {
            let mut inter = 0.0;
            for j in 0..5 {
                if j != i {
                    inter += p.beta * x[i] * (1.0 - x[i]) / (x[i] - x[j]);
                }
            }
            let dx = p.a + 1.0 - (p.a + p.b + 2.0) * x[i] + inter;
            direct += f1.eval(x[i]) * dx + f2.eval(x[i]) * x[i] * (1.0 - x[i]);
        }
        direct /= 5.0;
        assert!((measure_drift(&x, &f, &p) - direct).abs() <= 1e-12);
    }

    #[test]
    fn s1_drift_is_linear() {
        // d/dt E S_1 = (a+1) − (a+b+2 + β(N−1)/2·2/… ) reduces to a+1 − (a+b+2)S_1 + β(N−1)/2 (1 − 2S_1).
        let p = ModelParams::new(0.3, 0.7, 2.0, 6).unwrap();
        let x = [0.05, 0.2, 0.33, 0.5, 0.61, 0.97];
        let s1 = x.iter().sum::<f64>() / 6.0;
        let expected = p.a + 1.0 - (p.a + p.b + 2.0) * s1 + p.beta * 5.0 / 2.0 * (1.0 - 2.0 * s1);
        assert!((measure_drift(&x, &Poly::x(), &p) - expected).abs() <= 1e-13);
    }

    #[test]
    fn qv_requires_increments() {
        let c = config(0.0, 0.0, 1.0, 3, 0.01, 1e-4);
        let path = simulate(&c, &RandomStream::new(1)).unwrap();
        assert!(matches!(martingale_qv_check(&path, &Poly::x(), &c.params), Err(Error::Contract(_))));
    }

    #[test]
    fn qv_of_constant_is_zero() {
        let mut c = config(0.0, 0.0, 1.0, 4, 0.05, 1e-4);
        c.keep_increments = true;
        let path = simulate(&c, &RandomStream::new(1)).unwrap();
        let r = martingale_qv_check(&path, &Poly::constant(3.0), &c.params).unwrap();
        assert_eq!((r.realized, r.predicted), (0.0, 0.0));
    }

    #[test]
    fn qv_single_particle() {
        let mut c = config(0.0, 0.0, 1.0, 1, 1.0, 1e-4);
        c.keep_increments = true;
        let path = simulate(&c, &RandomStream::new(21)).unwrap();
        let r = martingale_qv_check(&path, &Poly::x(), &c.params).unwrap();
        assert!(r.relative_error <= 0.05, "{r:?}");
    }

    #[test]
    fn fluctuation_of_constant_vanishes() {
        let c = config(0.0, 0.0, 1.0, 5, 0.01, 1e-3);
        let path = simulate(&c, &RandomStream::new(2)).unwrap();
        let lp = LimitParams::new(0.0, 0.0, 1.0).unwrap();
        assert!(fluctuation_process(&path, &Poly::constant(2.0), lp).iter().all(|&v| v == 0.0));
        let fx = fluctuation_process(&path, &Poly::x(), lp);
        let s1 = moment_process(&path, 1);
        for (f, s) in fx.iter().zip(&s1) {
            assert!((f - 5f64.sqrt() * (s - 0.5)).abs() <= 1e-14);
        }
    }

    #[test]
    fn decay_fit_recovers_exponential() {
        let lags: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let acov: Vec<f64> = lags.iter().map(|t| 0.3 * (-7.0 * t).exp()).collect();
        assert!((fit_decay_rate(&lags, &acov) - 7.0).abs() < 1e-10);
    }
}
