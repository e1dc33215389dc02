//! Pareto set model: a preference-conditioned MLP h(r|θ) from the
//! simplex into the decision box, trained through the GP surrogates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{ObjectiveSource, SurrogateSet};
use crate::moo::{greedy_batch_select, FrontSet};
use crate::problems::ProblemSpec;
use crate::sampling::{derive_seed, rng_from};
use crate::scalarization::{chebyshev, sample_preferences};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsmArchitecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    offset: usize,
}

impl Layer {
    fn weights(self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.fan_in * self.fan_out
    }

    fn biases(self) -> std::ops::Range<usize> {
        let start = self.offset + self.fan_in * self.fan_out;
        start..start + self.fan_out
    }

    fn glorot_bound(self) -> f64 {
        (6.0 / (self.fan_in + self.fan_out) as f64).sqrt()
    }
}

impl PsmArchitecture {
    pub fn new(m: usize, hidden: Vec<usize>, n: usize) -> Self {
        Self {
            input_dim: m,
            hidden,
            output_dim: n,
        }
    }

    fn layers(&self) -> Vec<Layer> {
        let mut widths = vec![self.input_dim];
        widths.extend(&self.hidden);
        widths.push(self.output_dim);
        let mut offset = 0;
        widths
            .windows(2)
            .map(|w| {
                let layer = Layer {
                    fan_in: w[0],
                    fan_out: w[1],
                    offset,
                };
                offset += (w[0] + 1) * w[1];
                layer
            })
            .collect()
    }

    /// Σ (fan_in + 1)·fan_out over layers.
    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| (l.fan_in + 1) * l.fan_out).sum()
    }

    /// Glorot bound √(6/(fan_in + fan_out)) of each layer.
    pub fn glorot_bounds(&self) -> Vec<f64> {
        self.layers().iter().map(|l| l.glorot_bound()).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidArgument("architecture with a zero-width layer".into()));
        }
        Ok(())
    }
}

/// Flat parameter vector; each layer stores its weights (fan_out × fan_in,
/// row-major) followed by its biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsmParams {
    pub architecture: PsmArchitecture,
    pub theta: Vec<f64>,
}

/// Forward pass result with the activations backprop needs.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input followed by each hidden layer's post-activation.
    activations: Vec<Vec<f64>>,
    /// Logistic output in (0, 1).
    squashed: Vec<f64>,
    pub x: Vec<f64>,
}

impl PsmParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(architecture: &PsmArchitecture, seed: u64) -> Result<Self> {
        architecture.validate()?;
        let mut theta = vec![0.0; architecture.param_count()];
        glorot_fill(architecture, &mut theta, seed);
        Ok(Self {
            architecture: architecture.clone(),
            theta,
        })
    }

    /// β·θ + (1 − β)·G with G a fresh Glorot draw under `seed`.
    pub fn reinit(&self, beta: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidArgument(format!("blend weight {beta} outside [0, 1]")));
        }
        if beta == 1.0 {
            return Ok(self.clone());
        }
        let fresh = Self::init(&self.architecture, seed)?;
        if beta == 0.0 {
            return Ok(fresh);
        }
        let theta = self
            .theta
            .iter()
            .zip(&fresh.theta)
            .map(|(p, g)| beta * p + (1.0 - beta) * g)
            .collect();
        Ok(Self {
            architecture: self.architecture.clone(),
            theta,
        })
    }

    fn check_theta(&self) -> Result<()> {
        if self.theta.len() != self.architecture.param_count() {
            return Err(Error::Dimension {
                expected: self.architecture.param_count(),
                got: self.theta.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, r: &[f64], lower: &[f64], upper: &[f64]) -> Result<ForwardTrace> {
        self.check_theta()?;
        let arch = &self.architecture;
        if r.len() != arch.input_dim {
            return Err(Error::Dimension {
                expected: arch.input_dim,
                got: r.len(),
            });
        }
        if lower.len() != arch.output_dim || upper.len() != arch.output_dim {
            return Err(Error::Dimension {
                expected: arch.output_dim,
                got: lower.len().min(upper.len()),
            });
        }
        let layers = arch.layers();
        let mut activations = vec![r.to_vec()];
        let mut squashed = Vec::new();
        for (li, layer) in layers.iter().enumerate() {
            let input = activations.last().expect("input present");
            let w = &self.theta[layer.weights()];
            let b = &self.theta[layer.biases()];
            let last = li + 1 == layers.len();
            let mut out = Vec::with_capacity(layer.fan_out);
            for (o, row) in w.chunks_exact(layer.fan_in).enumerate() {
                let z = b[o] + row.iter().zip(input).map(|(a, c)| a * c).sum::<f64>();
                if !z.is_finite() {
                    return Err(Error::Numerical { layer: li });
                }
                out.push(if last { 1.0 / (1.0 + (-z).exp()) } else { z.max(0.0) });
            }
            if last {
                squashed = out;
            } else {
                activations.push(out);
            }
        }
        let x = squashed
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(s, (lo, hi))| (lo + (hi - lo) * s).clamp(*lo, *hi))
            .collect();
        Ok(ForwardTrace {
            activations,
            squashed,
            x,
        })
    }

    /// Backpropagates ∂L/∂x to (∂L/∂θ, ∂L/∂r).
    pub fn backward(&self, trace: &ForwardTrace, dl_dx: &[f64], lower: &[f64], upper: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let layers = self.architecture.layers();
        let mut grad = vec![0.0; self.theta.len()];
        let mut delta: Vec<f64> = dl_dx
            .iter()
            .zip(&trace.squashed)
            .zip(lower.iter().zip(upper))
            .map(|((g, s), (lo, hi))| g * (hi - lo) * s * (1.0 - s))
            .collect();
        for (li, layer) in layers.iter().enumerate().rev() {
            let input = &trace.activations[li];
            let w = &self.theta[layer.weights()];
            let gw = &mut grad[layer.weights()];
            for (o, d) in delta.iter().enumerate() {
                let row = &mut gw[o * layer.fan_in..(o + 1) * layer.fan_in];
                row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
            }
            grad[layer.biases()].iter_mut().zip(&delta).for_each(|(g, d)| *g += d);
            let mut prev = vec![0.0; layer.fan_in];
            for (o, d) in delta.iter().enumerate() {
                let row = &w[o * layer.fan_in..(o + 1) * layer.fan_in];
                prev.iter_mut().zip(row).for_each(|(p, wv)| *p += d * wv);
            }
            if li > 0 {
                // rectifier derivative: the input was a hidden activation
                prev.iter_mut().zip(input).for_each(|(p, a)| {
                    if *a <= 0.0 {
                        *p = 0.0
                    }
                });
            }
            delta = prev;
        }
        (grad, delta)
    }

    pub fn max_abs(&self) -> f64 {
        self.theta.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

fn glorot_fill(arch: &PsmArchitecture, theta: &mut [f64], seed: u64) {
    for (li, layer) in arch.layers().into_iter().enumerate() {
        let a = layer.glorot_bound();
        let mut rng = rng_from(derive_seed(seed, &[0x676c, li as u64]));
        for w in &mut theta[layer.weights()] {
            *w = rng.random_range(-a..a);
        }
        theta[layer.biases()].iter_mut().for_each(|b| *b = 0.0);
    }
}

/// β(i) = β₀ / decay^⌊i/period⌋.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSchedule {
    pub beta0: f64,
    pub decay_factor: f64,
    pub period: usize,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        Self {
            beta0: 0.2,
            decay_factor: 10.0,
            period: 5,
        }
    }
}

impl BetaSchedule {
    pub fn beta(&self, iteration: usize) -> f64 {
        let exponent = (iteration / self.period.max(1)) as i32;
        self.beta0 / self.decay_factor.powi(exponent)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta0) || !(self.decay_factor > 1.0) || self.period == 0 {
            return Err(Error::Config("beta schedule needs beta0 in [0,1], decay > 1, period ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    GradientDescent,
    Adam,
}

/// Inner-loop settings shared by training and proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Gradient steps per outer iteration (T).
    pub steps: usize,
    /// Preferences sampled per step (K).
    pub prefs_per_step: usize,
    /// Candidate preferences per proposal (B).
    pub candidates: usize,
    pub eta: f64,
    /// LCB multiplier λ.
    pub lambda: f64,
    pub optimizer: Optimizer,
    /// Surrogate statistic used in the training loss.
    pub loss_source: ObjectiveSource,
    /// Surrogate statistic used to score candidates for HVI.
    pub hvi_source: ObjectiveSource,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 250,
            prefs_per_step: 16,
            candidates: 1000,
            eta: 1e-3,
            lambda: 2.0,
            optimizer: Optimizer::GradientDescent,
            loss_source: ObjectiveSource::Lcb,
            hvi_source: ObjectiveSource::PosteriorMean,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepDiagnostics {
    /// Preferences whose active objective had its σ-term dropped.
    pub sigma_skips: usize,
}

/// Pairwise tree sum of equally sized vectors; fixed order for any input.
fn tree_sum(mut parts: Vec<Vec<f64>>) -> Vec<f64> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// Mean Chebyshev loss over `prefs` and its gradient in θ.
pub fn loss_and_gradient(
    params: &PsmParams,
    surrogates: &SurrogateSet,
    problem: &ProblemSpec,
    z: &[f64],
    prefs: &[Vec<f64>],
    config: &TrainConfig,
) -> Result<(f64, Vec<f64>, StepDiagnostics)> {
    let (lower, upper) = problem.bounds();
    let mut diagnostics = StepDiagnostics::default();
    let mut losses = Vec::with_capacity(prefs.len());
    let mut grads = Vec::with_capacity(prefs.len());
    for r in prefs {
        let trace = params.forward(r, lower, upper)?;
        let f_hat = surrogates.objectives(&trace.x, config.loss_source, config.lambda)?;
        let cheb = chebyshev(&f_hat, r, z)?;
        let j = cheb.argmax;
        let model = &surrogates.models[j];
        let local = match config.loss_source {
            ObjectiveSource::Lcb => {
                let g = model.grad_lcb(&trace.x, config.lambda)?;
                if g.sigma_skipped {
                    diagnostics.sigma_skips += 1;
                }
                g.gradient
            }
            ObjectiveSource::PosteriorMean => model.posterior_with_gradient(&trace.x)?.mean_gradient,
        };
        let dl_dx: Vec<f64> = local.iter().map(|g| g * cheb.subgradient[j]).collect();
        let (g, _) = params.backward(&trace, &dl_dx, lower, upper);
        losses.push(cheb.value);
        grads.push(g);
    }
    let k = prefs.len().max(1) as f64;
    let loss = tree_sum(losses.into_iter().map(|l| vec![l]).collect())
        .first()
        .copied()
        .unwrap_or(0.0)
        / k;
    let mut grad = tree_sum(grads);
    if grad.is_empty() {
        grad = vec![0.0; params.theta.len()];
    }
    grad.iter_mut().for_each(|g| *g /= k);
    Ok((loss, grad, diagnostics))
}

/// One plain gradient-descent step on `k` freshly sampled preferences.
/// Returns the updated parameters and the pre-update loss.
#[allow(clippy::too_many_arguments)]
pub fn train_step(
    params: &PsmParams,
    surrogates: &SurrogateSet,
    problem: &ProblemSpec,
    z: &[f64],
    k: usize,
    eta: f64,
    config: &TrainConfig,
    seed: u64,
) -> Result<(PsmParams, f64)> {
    let prefs = sample_preferences(k, problem.m, seed);
    let (loss, grad, _) = loss_and_gradient(params, surrogates, problem, z, &prefs, config)?;
    let mut next = params.clone();
    if eta != 0.0 {
        next.theta.iter_mut().zip(&grad).for_each(|(t, g)| *t -= eta * g);
    }
    Ok((next, loss))
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub losses: Vec<f64>,
    pub sigma_skips: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, theta: &mut [f64], grad: &[f64], eta: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * grad[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * grad[i] * grad[i];
            theta[i] -= eta * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}

/// `config.steps` sequential steps with per-step derived seeds.
pub fn train(
    params: &PsmParams,
    surrogates: &SurrogateSet,
    problem: &ProblemSpec,
    z: &[f64],
    config: &TrainConfig,
    seed: u64,
) -> Result<(PsmParams, TrainReport)> {
    let mut current = params.clone();
    let mut report = TrainReport::default();
    let mut adam = Adam {
        m: vec![0.0; params.theta.len()],
        v: vec![0.0; params.theta.len()],
        t: 0,
    };
    for t in 0..config.steps {
        let prefs = sample_preferences(config.prefs_per_step, problem.m, derive_seed(seed, &[t as u64]));
        let (loss, grad, diag) = loss_and_gradient(&current, surrogates, problem, z, &prefs, config)?;
        match config.optimizer {
            Optimizer::GradientDescent => current
                .theta
                .iter_mut()
                .zip(&grad)
                .for_each(|(p, g)| *p -= config.eta * g),
            Optimizer::Adam => adam.step(&mut current.theta, &grad, config.eta),
        }
        report.losses.push(loss);
        report.sigma_skips += diag.sigma_skips;
    }
    Ok((current, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub designs: Vec<Vec<f64>>,
    /// Surrogate objective vectors the selection was scored on.
    pub predicted: Vec<Vec<f64>>,
    pub shortfall: bool,
}

/// Drops designs within 1e−9 (∞-norm) of an earlier design or of `known`.
pub(crate) fn dedup_designs(designs: Vec<Vec<f64>>, known: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(u, v)| (u - v).abs() <= 1e-9);
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(designs.len());
    for d in designs {
        if known.iter().any(|k| close(k, &d)) || kept.iter().any(|k| close(k, &d)) {
            continue;
        }
        kept.push(d);
    }
    kept
}

/// Maps `config.candidates` random preferences through the model, snaps
/// them to the problem's grid, drops duplicates (also against
/// `archive_designs`) and greedily picks `b2` by hypervolume improvement
/// over `existing`.
#[allow(clippy::too_many_arguments)]
pub fn propose_batch(
    params: &PsmParams,
    surrogates: &SurrogateSet,
    problem: &ProblemSpec,
    existing: &FrontSet,
    archive_designs: &[Vec<f64>],
    b2: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<Proposal> {
    if b2 == 0 || config.candidates < b2 {
        return Err(Error::InvalidArgument(format!(
            "need candidates ({}) ≥ batch ({b2}) ≥ 1",
            config.candidates
        )));
    }
    let (lower, upper) = problem.bounds();
    let prefs = sample_preferences(config.candidates, problem.m, seed);
    let designs = prefs
        .iter()
        .map(|r| params.forward(r, lower, upper).map(|t| problem.snap(&t.x)))
        .collect::<Result<Vec<_>>>()?;
    let designs = dedup_designs(designs, archive_designs);
    let predicted = designs
        .iter()
        .map(|x| surrogates.objectives(x, config.hvi_source, config.lambda))
        .collect::<Result<Vec<_>>>()?;
    let selection = greedy_batch_select(&predicted, existing, b2)?;
    Ok(Proposal {
        designs: selection.indices.iter().map(|&i| designs[i].clone()).collect(),
        predicted: selection.indices.iter().map(|&i| predicted[i].clone()).collect(),
        shortfall: selection.shortfall,
    })
}
