//! Per-objective Gaussian-process surrogate with an anisotropic
//! squared-exponential kernel.
//!
//! Targets are standardized before fitting; every public prediction is in
//! the original units. Hyperparameters are fitted by multi-start gradient
//! ascent on the log marginal likelihood in log-parameter space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{backward_solve_transposed, cholesky_in_place, dot, forward_solve, inverse_from_cholesky};
use crate::sampling::{derive_seed, rng_from};

pub const LENGTHSCALE_RANGE: (f64, f64) = (1e-4, 1e4);
pub const SIGNAL_RANGE: (f64, f64) = (1e-6, 1e6);
pub const NOISE_RANGE: (f64, f64) = (1e-8, 1.0);
const JITTER_MAX: f64 = 1e-2;
/// Below this predictive standard deviation the σ-term of the LCB gradient is dropped.
pub const SIGMA_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    fn to_log(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_variance.ln());
        v.push(self.noise_variance.ln());
        v
    }

    fn from_log(v: &[f64]) -> Self {
        let d = v.len() - 2;
        Self {
            lengthscales: v[..d].iter().map(|l| l.exp()).collect(),
            signal_variance: v[d].exp(),
            noise_variance: v[d + 1].exp(),
        }
    }

    /// Clamps every entry into its admissible range.
    pub fn clamped(&self) -> Self {
        Self {
            lengthscales: self
                .lengthscales
                .iter()
                .map(|l| l.clamp(LENGTHSCALE_RANGE.0, LENGTHSCALE_RANGE.1))
                .collect(),
            signal_variance: self.signal_variance.clamp(SIGNAL_RANGE.0, SIGNAL_RANGE.1),
            noise_variance: self.noise_variance.clamp(NOISE_RANGE.0, NOISE_RANGE.1),
        }
    }
}

fn log_bounds(d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![LENGTHSCALE_RANGE.0.ln(); d];
    let mut hi = vec![LENGTHSCALE_RANGE.1.ln(); d];
    lo.push(SIGNAL_RANGE.0.ln());
    hi.push(SIGNAL_RANGE.1.ln());
    lo.push(NOISE_RANGE.0.ln());
    hi.push(NOISE_RANGE.1.ln());
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpConfig {
    /// Restarts when no previous hyperparameters are available.
    pub restarts: usize,
    /// Restarts when previous hyperparameters are injected as restart #0.
    pub warm_restarts: usize,
    pub max_steps: usize,
    pub step_size: f64,
    /// Stop a restart once an accepted step gains less than this (absolute) log likelihood.
    pub tolerance: f64,
    /// Refits start restart #0 from the previous iteration's hyperparameters.
    pub inject_previous: bool,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            warm_restarts: 1,
            max_steps: 200,
            step_size: 0.05,
            tolerance: 1e-4,
            inject_previous: true,
        }
    }
}

/// Initial and final log marginal likelihood of one restart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartTrace {
    pub initial_mll: f64,
    pub final_mll: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct SurrogateModel {
    pub params: KernelParams,
    x: Vec<Vec<f64>>,
    /// Standardized targets.
    y: Vec<f64>,
    /// Lower Cholesky factor of K + (noise + jitter)·I, row-major.
    chol: Vec<f64>,
    alpha: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
    pub jitter: f64,
    pub log_marginal_likelihood: f64,
}

/// Merges exactly repeated inputs, averaging their targets. Order of first
/// occurrence is kept.
fn merge_duplicates(x: &[Vec<f64>], y: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(x.len());
    let mut sums: Vec<(f64, usize)> = Vec::with_capacity(x.len());
    let mut index = std::collections::HashMap::new();
    for (xi, &yi) in x.iter().zip(y) {
        let key: Vec<u64> = xi.iter().map(|v| v.to_bits()).collect();
        match index.get(&key) {
            Some(&k) => {
                let entry: &mut (f64, usize) = &mut sums[k];
                entry.0 += yi;
                entry.1 += 1;
            }
            None => {
                index.insert(key, xs.len());
                xs.push(xi.clone());
                sums.push((yi, 1));
            }
        }
    }
    let ys = sums.into_iter().map(|(s, c)| s / c as f64).collect();
    (xs, ys)
}

fn standardize(y: &[f64]) -> (Vec<f64>, f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    (y.iter().map(|v| (v - mean) / std).collect(), mean, std)
}

/// Noise-free kernel matrix.
fn kernel_matrix(x: &[Vec<f64>], params: &KernelParams) -> Vec<f64> {
    let n = x.len();
    let inv_l2: Vec<f64> = params.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = params.signal_variance;
        for j in 0..i {
            let r2: f64 = x[i]
                .iter()
                .zip(&x[j])
                .zip(&inv_l2)
                .map(|((a, b), w)| (a - b) * (a - b) * w)
                .sum();
            let v = params.signal_variance * (-0.5 * r2).exp();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Factors K + (noise + jitter)·I, escalating the jitter from 1e−8 up to 1e−2.
fn factor(kf: &[f64], n: usize, noise: f64) -> Option<(Vec<f64>, f64)> {
    let mut jitter = 0.0;
    loop {
        let mut a = kf.to_vec();
        for i in 0..n {
            a[i * n + i] += noise + jitter;
        }
        if cholesky_in_place(&mut a, n) {
            return Some((a, jitter));
        }
        jitter = if jitter == 0.0 { 1e-8 } else { jitter * 10.0 };
        if jitter > JITTER_MAX * (1.0 + 1e-9) {
            return None;
        }
    }
}

struct Objective<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
}

struct Evaluated {
    mll: f64,
    kf: Vec<f64>,
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
}

impl Objective<'_> {
    fn evaluate(&self, params: &KernelParams) -> Option<Evaluated> {
        let n = self.x.len();
        let kf = kernel_matrix(self.x, params);
        let (chol, jitter) = factor(&kf, n, params.noise_variance)?;
        let mut alpha = self.y.to_vec();
        forward_solve(&chol, n, &mut alpha);
        let fit = dot(&alpha, &alpha);
        backward_solve_transposed(&chol, n, &mut alpha);
        let logdet: f64 = (0..n).map(|i| chol[i * n + i].ln()).sum();
        let mll = -0.5 * fit - logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        if !mll.is_finite() {
            return None;
        }
        Some(Evaluated {
            mll,
            kf,
            chol,
            alpha,
            jitter,
        })
    }

    /// Gradient of the log marginal likelihood with respect to
    /// (log ℓ₁…log ℓ_d, log s², log σ²_n).
    fn gradient(&self, params: &KernelParams, ev: &Evaluated) -> Vec<f64> {
        let n = self.x.len();
        let d = params.lengthscales.len();
        let inv = inverse_from_cholesky(&ev.chol, n);
        let inv_l2: Vec<f64> = params.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        let mut g = vec![0.0; d + 2];
        let mut trace_w = 0.0;
        for i in 0..n {
            let wii = ev.alpha[i] * ev.alpha[i] - inv[i * n + i];
            trace_w += wii;
            g[d] += 0.5 * wii * ev.kf[i * n + i];
            for j in 0..i {
                let wij = ev.alpha[i] * ev.alpha[j] - inv[i * n + j];
                let wk = wij * ev.kf[i * n + j];
                // symmetric pair counted twice, times the ½
                g[d] += wk;
                for (k, w) in inv_l2.iter().enumerate() {
                    let delta = self.x[i][k] - self.x[j][k];
                    g[k] += wk * delta * delta * w;
                }
            }
        }
        g[d + 1] = 0.5 * trace_w * params.noise_variance;
        g
    }
}

impl SurrogateModel {
    /// Builds the posterior for fixed hyperparameters.
    pub fn with_params(x: &[Vec<f64>], y: &[f64], params: KernelParams) -> Result<Self> {
        validate(x, y)?;
        let (xs, ys) = merge_duplicates(x, y);
        let (ys, y_mean, y_std) = standardize(&ys);
        if params.lengthscales.len() != xs[0].len() {
            return Err(Error::Dimension {
                expected: xs[0].len(),
                got: params.lengthscales.len(),
            });
        }
        let objective = Objective { x: &xs, y: &ys };
        let ev = objective
            .evaluate(&params)
            .ok_or_else(|| Error::Fit("kernel matrix singular after jitter escalation".into()))?;
        Ok(Self::assemble(xs, ys, y_mean, y_std, params, ev))
    }

    fn assemble(x: Vec<Vec<f64>>, y: Vec<f64>, y_mean: f64, y_std: f64, params: KernelParams, ev: Evaluated) -> Self {
        Self {
            params,
            x,
            y,
            chol: ev.chol,
            alpha: ev.alpha,
            y_mean,
            y_std,
            jitter: ev.jitter,
            log_marginal_likelihood: ev.mll,
        }
    }

    /// Fits hyperparameters by multi-start gradient ascent on the log
    /// marginal likelihood. `previous`, when given, is restart #0.
    pub fn fit(x: &[Vec<f64>], y: &[f64], seed: u64, config: &GpConfig, previous: Option<&KernelParams>) -> Result<Self> {
        Self::fit_traced(x, y, seed, config, previous).map(|(m, _)| m)
    }

    pub fn fit_traced(
        x: &[Vec<f64>],
        y: &[f64],
        seed: u64,
        config: &GpConfig,
        previous: Option<&KernelParams>,
    ) -> Result<(Self, Vec<RestartTrace>)> {
        validate(x, y)?;
        let (xs, ys) = merge_duplicates(x, y);
        let (ys, y_mean, y_std) = standardize(&ys);
        let d = xs[0].len();
        if let Some(p) = previous {
            if p.lengthscales.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: p.lengthscales.len(),
                });
            }
        }
        let objective = Objective { x: &xs, y: &ys };

        let spread: Vec<f64> = (0..d)
            .map(|k| {
                let (lo, hi) = xs
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])));
                if hi - lo > 1e-12 {
                    hi - lo
                } else {
                    1.0
                }
            })
            .collect();

        let restarts = if previous.is_some() {
            config.warm_restarts.max(1)
        } else {
            config.restarts.max(1)
        };
        let mut rng = rng_from(derive_seed(seed, &[0x6770]));
        let mut best: Option<(KernelParams, Evaluated)> = None;
        let mut traces = Vec::with_capacity(restarts);
        for r in 0..restarts {
            let start = match (r, previous) {
                (0, Some(p)) => p.clamped(),
                (0, None) => KernelParams {
                    lengthscales: spread.iter().map(|s| 0.5 * s).collect(),
                    signal_variance: 1.0,
                    noise_variance: 1e-6,
                },
                _ => KernelParams {
                    lengthscales: spread
                        .iter()
                        .map(|s| s * (rng.random_range((0.05f64).ln()..(2.0f64).ln())).exp())
                        .collect(),
                    signal_variance: rng.random_range((0.1f64).ln()..(10.0f64).ln()).exp(),
                    noise_variance: rng.random_range((1e-8f64).ln()..(1e-3f64).ln()).exp(),
                }
                .clamped(),
            };
            let Some((params, ev, trace)) = ascend(&objective, start, config) else {
                continue;
            };
            traces.push(trace);
            if best.as_ref().is_none_or(|(_, b)| ev.mll > b.mll) {
                best = Some((params, ev));
            }
        }
        let (params, ev) = best.ok_or_else(|| Error::Fit("kernel matrix singular after jitter escalation for every restart".into()))?;
        Ok((Self::assemble(xs, ys, y_mean, y_std, params, ev), traces))
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn training_inputs(&self) -> &[Vec<f64>] {
        &self.x
    }

    /// Lower Cholesky factor of the (standardized) training covariance.
    pub fn factor(&self) -> &[f64] {
        &self.chol
    }

    /// Noise-free kernel vector against the training inputs.
    fn kernel_vector(&self, x: &[f64]) -> Vec<f64> {
        let inv_l2: Vec<f64> = self.params.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        self.x
            .iter()
            .map(|xi| {
                let r2: f64 = xi.iter().zip(x).zip(&inv_l2).map(|((a, b), w)| (a - b) * (a - b) * w).sum();
                self.params.signal_variance * (-0.5 * r2).exp()
            })
            .collect()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Posterior mean only; cheaper than [`posterior`](Self::posterior).
    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let k = self.kernel_vector(x);
        Ok(self.y_mean + self.y_std * dot(&k, &self.alpha))
    }

    /// Posterior mean and variance, variance clamped at zero.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(x)?;
        let n = self.x.len();
        let k = self.kernel_vector(x);
        let mean = dot(&k, &self.alpha);
        let mut v = k;
        forward_solve(&self.chol, n, &mut v);
        let var = (self.params.signal_variance - dot(&v, &v)).max(0.0);
        Ok((self.y_mean + self.y_std * mean, self.y_std * self.y_std * var))
    }

    /// Lower confidence bound μ̂ − λσ̂.
    pub fn lcb(&self, x: &[f64], lambda: f64) -> Result<f64> {
        let (mean, var) = self.posterior(x)?;
        Ok(mean - lambda * var.sqrt())
    }

    /// Posterior mean, variance and both of their input gradients.
    pub fn posterior_with_gradient(&self, x: &[f64]) -> Result<PosteriorGradient> {
        self.check_dim(x)?;
        let n = self.x.len();
        let d = self.dim();
        let k = self.kernel_vector(x);
        let inv_l2: Vec<f64> = self.params.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        let mut v = k.clone();
        forward_solve(&self.chol, n, &mut v);
        let var = (self.params.signal_variance - dot(&v, &v)).max(0.0);
        let mut beta = v;
        backward_solve_transposed(&self.chol, n, &mut beta);

        // ∂k_i/∂x = −(x − x_i)/ℓ² · k_i
        let mut dmean = vec![0.0; d];
        let mut dvar = vec![0.0; d];
        for i in 0..n {
            let wa = self.alpha[i] * k[i];
            let wb = beta[i] * k[i];
            for c in 0..d {
                let g = -(x[c] - self.x[i][c]) * inv_l2[c];
                dmean[c] += wa * g;
                dvar[c] += wb * g;
            }
        }
        let s2 = self.y_std * self.y_std;
        Ok(PosteriorGradient {
            mean: self.y_mean + self.y_std * dot(&k, &self.alpha),
            variance: s2 * var,
            mean_gradient: dmean.into_iter().map(|g| self.y_std * g).collect(),
            variance_gradient: dvar.into_iter().map(|g| -2.0 * s2 * g).collect(),
        })
    }

    /// Value and input gradient of the LCB. When σ̂ is below
    /// [`SIGMA_FLOOR`] the σ-term is dropped and flagged.
    pub fn grad_lcb(&self, x: &[f64], lambda: f64) -> Result<LcbGradient> {
        let p = self.posterior_with_gradient(x)?;
        let sigma = p.variance.sqrt();
        if lambda == 0.0 || sigma <= SIGMA_FLOOR {
            return Ok(LcbGradient {
                value: p.mean - lambda * sigma,
                gradient: p.mean_gradient,
                sigma_skipped: lambda != 0.0,
            });
        }
        let gradient = p
            .mean_gradient
            .iter()
            .zip(&p.variance_gradient)
            .map(|(dm, dv)| dm - lambda * dv / (2.0 * sigma))
            .collect();
        Ok(LcbGradient {
            value: p.mean - lambda * sigma,
            gradient,
            sigma_skipped: false,
        })
    }

    /// Standardized training targets.
    pub fn standardized_targets(&self) -> &[f64] {
        &self.y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGradient {
    pub mean: f64,
    pub variance: f64,
    pub mean_gradient: Vec<f64>,
    pub variance_gradient: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcbGradient {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub sigma_skipped: bool,
}

fn validate(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::InvalidArgument("zero-dimensional inputs".into()));
    }
    for xi in x {
        if xi.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: xi.len(),
            });
        }
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite training data".into()));
    }
    Ok(())
}

/// Normalized-gradient ascent with backtracking; returns the final point.
fn ascend(objective: &Objective<'_>, start: KernelParams, config: &GpConfig) -> Option<(KernelParams, Evaluated, RestartTrace)> {
    let d = start.lengthscales.len();
    let (lo, hi) = log_bounds(d);
    let mut theta = start.to_log();
    let mut params = start;
    let mut ev = objective.evaluate(&params)?;
    let initial_mll = ev.mll;
    let mut step = config.step_size;
    let mut steps = 0;
    for _ in 0..config.max_steps {
        let mut g = objective.gradient(&params, &ev);
        // freeze coordinates pinned against a bound
        for i in 0..g.len() {
            if (theta[i] <= lo[i] && g[i] < 0.0) || (theta[i] >= hi[i] && g[i] > 0.0) {
                g[i] = 0.0;
            }
        }
        let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(scale > 1e-12) {
            break;
        }
        let mut accepted = None;
        while step >= 1e-6 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(&g)
                .enumerate()
                .map(|(i, (t, gi))| (t + step * gi / scale).clamp(lo[i], hi[i]))
                .collect();
            let cand_params = KernelParams::from_log(&cand);
            if let Some(cev) = objective.evaluate(&cand_params) {
                if cev.mll > ev.mll {
                    accepted = Some((cand, cand_params, cev));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, cand_params, cev)) = accepted else {
            break;
        };
        let gain = cev.mll - ev.mll;
        theta = cand;
        params = cand_params;
        ev = cev;
        steps += 1;
        if gain < config.tolerance {
            break;
        }
        step = (step * 2.0).min(config.step_size);
    }
    let trace = RestartTrace {
        initial_mll,
        final_mll: ev.mll,
        steps,
    };
    Some((params, ev, trace))
}

/// Which surrogate statistic stands in for an objective value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSource {
    PosteriorMean,
    Lcb,
}

/// One independent surrogate per objective.
#[derive(Debug, Clone)]
pub struct SurrogateSet {
    pub models: Vec<SurrogateModel>,
}

impl SurrogateSet {
    /// Fits one model per objective column of `y`. Objective j uses the
    /// seed derived from (`seed`, j) and `previous[j]` as its restart #0.
    pub fn fit(x: &[Vec<f64>], y: &[Vec<f64>], seed: u64, config: &GpConfig, previous: Option<&[KernelParams]>) -> Result<Self> {
        let m = y.first().map_or(0, |r| r.len());
        if m == 0 {
            return Err(Error::InvalidArgument("no objectives to fit".into()));
        }
        if let Some(p) = previous {
            if p.len() != m {
                return Err(Error::Dimension { expected: m, got: p.len() });
            }
        }
        let models = (0..m)
            .map(|j| {
                let column: Vec<f64> = y.iter().map(|r| r[j]).collect();
                SurrogateModel::fit(x, &column, derive_seed(seed, &[j as u64]), config, previous.map(|p| &p[j]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { models })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn params(&self) -> Vec<KernelParams> {
        self.models.iter().map(|m| m.params.clone()).collect()
    }

    pub fn means(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.models.iter().map(|m| m.mean(x)).collect()
    }

    /// Per-objective posterior mean and standard deviation.
    pub fn predict(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut means = Vec::with_capacity(self.len());
        let mut stds = Vec::with_capacity(self.len());
        for m in &self.models {
            let (mu, var) = m.posterior(x)?;
            means.push(mu);
            stds.push(var.sqrt());
        }
        Ok((means, stds))
    }

    pub fn objectives(&self, x: &[f64], source: ObjectiveSource, lambda: f64) -> Result<Vec<f64>> {
        match source {
            ObjectiveSource::PosteriorMean => self.means(x),
            ObjectiveSource::Lcb => self.models.iter().map(|m| m.lcb(x, lambda)).collect(),
        }
    }
}
