//! Gaussian-process regression with a squared-exponential ARD kernel, the
//! expected-improvement acquisition, and a multi-start acquisition maximizer.
//!
//! Inputs live in the unit cube and targets are standardized before fitting;
//! [`GpModel::posterior`] reports results on the original target scale.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{Error, Result};
use crate::space::{BoxSpace, Halton};

/// Eight log-spaced shared length-scales from 0.05 to 2 (unit-cube units).
pub fn length_scale_grid() -> [f64; 8] {
    core::array::from_fn(|i| 0.05 * libm::pow(2.0 / 0.05, i as f64 / 7.0))
}

pub const NOISE_GRID: [f64; 3] = [1e-6, 1e-4, 1e-2];

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub enum LengthScales {
    /// One shared length-scale picked from [`length_scale_grid`].
    Grid,
    Shared(f64),
    PerDim(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseVariance {
    /// Picked from [`NOISE_GRID`].
    Grid,
    Fixed(f64),
}

/// How kernel hyper-parameters are chosen. Grid entries are resolved by
/// maximizing the log marginal likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct GpConfig {
    pub length_scales: LengthScales,
    pub noise: NoiseVariance,
    pub signal_variance: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            length_scales: LengthScales::Grid,
            noise: NoiseVariance::Grid,
            signal_variance: 1.0,
        }
    }
}

/// Resolved kernel hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub length_scales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a
            .iter()
            .zip(b)
            .zip(&self.length_scales)
            .map(|((x, y), l)| {
                let d = (x - y) / l;
                d * d
            })
            .sum();
        self.signal_variance * libm::exp(-0.5 * r2)
    }
}

#[derive(Debug, Clone)]
pub struct GpModel {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    offset: f64,
    scale: f64,
    kernel: Kernel,
    jitter: f64,
    chol: Cholesky<f64, Dyn>,
    weights: DVector<f64>,
    log_marginal_likelihood: f64,
}

struct Factorized {
    chol: Cholesky<f64, Dyn>,
    weights: DVector<f64>,
    jitter: f64,
    lml: f64,
}

fn factorize(x: &[Vec<f64>], ys: &DVector<f64>, kernel: &Kernel) -> Result<Factorized> {
    let n = x.len();
    let gram = DMatrix::from_fn(n, n, |i, j| kernel.eval(&x[i], &x[j]));
    let mut jitter = 0.0;
    loop {
        let mut k = gram.clone();
        for i in 0..n {
            k[(i, i)] += kernel.noise_variance + jitter;
        }
        if let Some(chol) = Cholesky::new(k) {
            let weights = chol.solve(ys);
            let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| libm::log(*v)).sum();
            let lml = -0.5 * ys.dot(&weights) - log_det - 0.5 * n as f64 * libm::log(2.0 * PI);
            return Ok(Factorized { chol, weights, jitter, lml });
        }
        jitter = if jitter == 0.0 { JITTER_START } else { jitter * 10.0 };
        if jitter > JITTER_MAX * 1.000_001 {
            return Err(Error::DegenerateModel { jitter: JITTER_MAX });
        }
    }
}

impl GpModel {
    /// Fits a model to `points` (unit-cube coordinates) and `values`.
    pub fn fit(points: &[Vec<f64>], values: &[f64], config: &GpConfig) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::NoObservations);
        }
        if points.len() != values.len() {
            return Err(Error::Config(alloc::format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Config("points have mixed dimensions".into()));
        }

        let n = values.len() as f64;
        let offset = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - offset) * (v - offset)).sum::<f64>() / n;
        let sd = libm::sqrt(var);
        let scale = if sd > 1e-12 { sd } else { 1.0 };
        let ys = DVector::from_iterator(values.len(), values.iter().map(|v| (v - offset) / scale));

        let ls_options: Vec<Vec<f64>> = match &config.length_scales {
            LengthScales::Grid => length_scale_grid().iter().map(|&l| vec![l; dim]).collect(),
            LengthScales::Shared(l) => vec![vec![*l; dim]],
            LengthScales::PerDim(ls) => {
                if ls.len() != dim {
                    return Err(Error::Config("length-scale count does not match dimension".into()));
                }
                vec![ls.clone()]
            }
        };
        let noise_options: &[f64] = match &config.noise {
            NoiseVariance::Grid => &NOISE_GRID,
            NoiseVariance::Fixed(v) => core::slice::from_ref(v),
        };

        let mut best: Option<(Kernel, Factorized)> = None;
        let mut last_err = Error::DegenerateModel { jitter: JITTER_MAX };
        for ls in &ls_options {
            for &noise in noise_options {
                let kernel = Kernel {
                    length_scales: ls.clone(),
                    signal_variance: config.signal_variance,
                    noise_variance: noise,
                };
                match factorize(points, &ys, &kernel) {
                    Ok(f) => {
                        if best.as_ref().is_none_or(|(_, b)| f.lml > b.lml) {
                            best = Some((kernel, f));
                        }
                    }
                    Err(e) => last_err = e,
                }
            }
        }
        let (kernel, f) = best.ok_or(last_err)?;
        Ok(Self {
            x: points.to_vec(),
            y: values.to_vec(),
            offset,
            scale,
            kernel,
            jitter: f.jitter,
            chol: f.chol,
            weights: f.weights,
            log_marginal_likelihood: f.lml,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Standardization offset: the prior mean on the original scale.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Standardization scale: prior standard deviation multiplier.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    /// Predictive mean and variance of an observation at `x`; variance
    /// includes the noise term and is clamped at zero.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let k_star = DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| self.kernel.eval(xi, x)));
        let mean = k_star.dot(&self.weights);
        let mut v = k_star;
        self.chol.l_dirty().solve_lower_triangular_mut(&mut v);
        let prior = self.kernel.signal_variance + self.kernel.noise_variance;
        let var = (prior - v.norm_squared()).max(0.0);
        (self.offset + self.scale * mean, self.scale * self.scale * var)
    }

    pub fn expected_improvement(&self, x: &[f64], f_best: f64) -> f64 {
        let (mu, var) = self.posterior(x);
        expected_improvement(mu, libm::sqrt(var), f_best)
    }
}

pub fn normal_pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * PI)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Expected improvement over `f_best` for maximization.
pub fn expected_improvement(mu: f64, sigma: f64, f_best: f64) -> f64 {
    let gain = mu - f_best;
    if !(sigma > 0.0) {
        return gain.max(0.0);
    }
    let z = gain / sigma;
    (gain * normal_cdf(z) + sigma * normal_pdf(z)).max(0.0)
}

/// Acquisition search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalConfig {
    pub candidates: usize,
    pub refinements: usize,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            candidates: 2048,
            refinements: 16,
            initial_step: 0.1,
            min_step: 1e-3,
        }
    }
}

/// Coordinate-wise hill climbing on EI with a shrinking step.
fn hill_climb(m: &GpModel, start: &[f64], start_ei: f64, f_best: f64, cfg: &ProposalConfig) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut best = start_ei;
    let mut step = cfg.initial_step;
    while step >= cfg.min_step {
        let mut improved = false;
        for d in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut trial = x.clone();
                trial[d] = (trial[d] + dir * step).clamp(0.0, 1.0);
                if trial[d] == x[d] {
                    continue;
                }
                let ei = m.expected_improvement(&trial, f_best);
                if ei > best {
                    best = ei;
                    x = trial;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, best)
}

/// Maximizes EI over `space` and returns the proposal in real coordinates.
///
/// Candidates come from a randomly shifted Halton stream; the best few are
/// refined by hill climbing. Ties go to the earliest candidate. A proposal
/// that collides with an observed point is nudged by one grid step.
pub fn propose_next<R: Rng + ?Sized>(
    m: &GpModel,
    space: &BoxSpace,
    f_best: f64,
    cfg: &ProposalConfig,
    rng: &mut R,
) -> Vec<f64> {
    let candidates: Vec<Vec<f64>> = Halton::new(space.len(), rng).take(cfg.candidates).collect();
    let scores: Vec<f64> = candidates
        .iter()
        .map(|c| m.expected_improvement(c, f_best))
        .collect();

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut best_idx = order.first().copied().unwrap_or(0);
    let mut best_point = candidates.get(best_idx).cloned().unwrap_or_else(|| vec![0.5; space.len()]);
    let mut best_score = scores.get(best_idx).copied().unwrap_or(f64::NEG_INFINITY);
    for (k, &i) in order.iter().take(cfg.refinements).enumerate() {
        let (x, ei) = hill_climb(m, &candidates[i], scores[i], f_best, cfg);
        let idx = candidates.len() + k;
        if ei > best_score || (ei == best_score && idx < best_idx) {
            best_idx = idx;
            best_point = x;
            best_score = ei;
        }
    }

    let observed: Vec<Vec<f64>> = m.points().iter().map(|p| space.denormalize(p)).collect();
    let proposal = space.denormalize(&best_point);
    avoid_observed(proposal, space, &observed, cfg.candidates)
}

fn avoid_observed(x: Vec<f64>, space: &BoxSpace, observed: &[Vec<f64>], grid: usize) -> Vec<f64> {
    let taken = |p: &[f64]| observed.iter().any(|o| o.as_slice() == p);
    if !taken(&x) {
        return x;
    }
    for k in 1..=grid {
        for (d, dim) in space.dims().iter().enumerate() {
            let step = if dim.integer {
                1.0
            } else {
                (dim.upper - dim.lower) / grid as f64
            };
            for dir in [1.0, -1.0] {
                let v = x[d] + dir * step * k as f64;
                if v < dim.lower || v > dim.upper {
                    continue;
                }
                let mut trial = x.clone();
                trial[d] = v;
                if !taken(&trial) {
                    return trial;
                }
            }
        }
    }
    // Every neighbour is taken; fall back to the original proposal.
    log::warn!("could not find an unobserved neighbour of the EI proposal");
    x
}
