//! Structural tier: Bayesian optimization over binary vectors.
//!
//! The surrogate is a Bayesian linear regression on second-order features
//! `[1, x_i, x_i x_j (i < j)]` with a Gaussian (ridge) prior. Each proposal
//! draws one coefficient vector from the posterior and maximizes the sampled
//! quadratic with simulated annealing over single-bit flips.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::params::{Algorithm, Policy, StructuralParams};

pub const N_STRUCTURAL_BITS: usize = 4;

const NOISE_ITERATIONS: usize = 100;

/// Bit layout: algorithm (Sarsa = 1), traces, policy (Softmax = 1), epsilon decay.
pub fn encode(p: &StructuralParams) -> [bool; N_STRUCTURAL_BITS] {
    [
        p.algorithm == Algorithm::Sarsa,
        p.eligibility_traces,
        p.policy == Policy::Softmax,
        p.epsilon_decay,
    ]
}

pub fn decode(bits: &[bool]) -> Result<StructuralParams> {
    if bits.len() != N_STRUCTURAL_BITS {
        return Err(Error::Encoding {
            expected: N_STRUCTURAL_BITS,
            found: bits.len(),
        });
    }
    Ok(StructuralParams {
        algorithm: if bits[0] { Algorithm::Sarsa } else { Algorithm::QLearning },
        eligibility_traces: bits[1],
        policy: if bits[2] { Policy::Softmax } else { Policy::EpsilonGreedy },
        epsilon_decay: bits[3],
    })
}

/// All sixteen structural configurations, in bit-index order.
pub fn all_structures() -> Vec<StructuralParams> {
    (0..1u8 << N_STRUCTURAL_BITS)
        .map(|i| {
            let bits: [bool; N_STRUCTURAL_BITS] = core::array::from_fn(|b| i >> b & 1 == 1);
            decode(&bits).expect("fixed length")
        })
        .collect()
}

pub fn n_features(d: usize) -> usize {
    1 + d + d * (d.saturating_sub(1)) / 2
}

/// Second-order feature map; pairs in lexicographic `(i, j)` order.
pub fn features(x: &[bool]) -> Vec<f64> {
    let d = x.len();
    let mut out = Vec::with_capacity(n_features(d));
    out.push(1.0);
    out.extend(x.iter().map(|&b| b as u8 as f64));
    for i in 0..d {
        for j in i + 1..d {
            out.push((x[i] && x[j]) as u8 as f64);
        }
    }
    out
}

/// Value of the quadratic model with coefficients `coeffs` at `x`.
pub fn quadratic_value(coeffs: &[f64], x: &[bool]) -> f64 {
    let d = x.len();
    let mut v = coeffs[0];
    for i in 0..d {
        if x[i] {
            v += coeffs[1 + i];
        }
    }
    let mut k = 1 + d;
    for i in 0..d {
        for j in i + 1..d {
            if x[i] && x[j] {
                v += coeffs[k];
            }
            k += 1;
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub initial_temperature: f64,
    pub cooling_rate: f64,
    pub sweeps: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            initial_temperature: 1.0,
            cooling_rate: 0.95,
            sweeps: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BocsConfig {
    /// Prior precision of every coefficient.
    pub prior_precision: f64,
    /// Observation noise variance; estimated from the residuals when `None`.
    pub noise_variance: Option<f64>,
    pub noise_floor: f64,
    /// Distinct seeded vectors tried before the first model fit.
    pub n_init: usize,
    pub schedule: AnnealSchedule,
}

impl Default for BocsConfig {
    fn default() -> Self {
        Self {
            prior_precision: 1.0,
            noise_variance: None,
            noise_floor: 1e-4,
            n_init: 4,
            schedule: AnnealSchedule::default(),
        }
    }
}

/// Gaussian posterior over the coefficients of the standardized targets.
#[derive(Debug, Clone)]
pub struct BocsModel {
    d: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    offset: f64,
    scale: f64,
    noise_variance: f64,
}

impl BocsModel {
    /// Wraps an explicit posterior (standardized scale, zero offset).
    pub fn from_posterior(d: usize, mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let p = n_features(d);
        if mean.len() != p || cov.len() != p * p {
            return Err(Error::Config(alloc::format!(
                "posterior for d = {d} needs {p} means and {p}x{p} covariance"
            )));
        }
        Ok(Self {
            d,
            mean: DVector::from_vec(mean),
            cov: DMatrix::from_row_slice(p, p, &cov),
            offset: 0.0,
            scale: 1.0,
            noise_variance: 1.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Posterior mean coefficients on the standardized scale.
    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Posterior mean coefficients on the original target scale.
    pub fn mean_coefficients(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.mean.iter().map(|w| w * self.scale).collect();
        out[0] += self.offset;
        out
    }

    /// Posterior predictive mean on the original scale.
    pub fn predict_mean(&self, x: &[bool]) -> f64 {
        self.offset + self.scale * quadratic_value(self.mean.as_slice(), x)
    }
}

/// Conjugate posterior for `observations` of `(bits, value)`.
pub fn fit_bocs(observations: &[(Vec<bool>, f64)], config: &BocsConfig) -> Result<BocsModel> {
    let Some((first, _)) = observations.first() else {
        return Err(Error::NoObservations);
    };
    let d = first.len();
    if let Some((bad, _)) = observations.iter().find(|(x, _)| x.len() != d) {
        return Err(Error::Encoding { expected: d, found: bad.len() });
    }
    let n = observations.len();
    let p = n_features(d);

    let values: Vec<f64> = observations.iter().map(|(_, y)| *y).collect();
    let offset = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - offset) * (v - offset)).sum::<f64>() / n as f64;
    let sd = libm::sqrt(var);
    let scale = if sd > 1e-12 { sd } else { 1.0 };

    let mut phi = DMatrix::zeros(n, p);
    for (r, (x, _)) in observations.iter().enumerate() {
        for (c, f) in features(x).into_iter().enumerate() {
            phi[(r, c)] = f;
        }
    }
    let y = DVector::from_iterator(n, values.iter().map(|v| (v - offset) / scale));
    let gram = phi.transpose() * &phi;
    let phi_y = phi.transpose() * &y;
    let identity = DMatrix::<f64>::identity(p, p);

    let posterior_mean = |noise: f64| -> Result<DVector<f64>> {
        let chol = Cholesky::new(&gram / noise + &identity * config.prior_precision)
            .ok_or(Error::DegenerateModel { jitter: 0.0 })?;
        Ok(chol.solve(&(&phi_y / noise)))
    };
    let noise = match config.noise_variance {
        Some(v) => v,
        None => {
            // Fixed point of: noise = mean squared residual of the posterior mean.
            let mut noise = 1.0;
            for _ in 0..NOISE_ITERATIONS {
                let resid = &y - &phi * posterior_mean(noise)?;
                let next = (resid.norm_squared() / n as f64).max(config.noise_floor);
                let done = (next - noise).abs() <= 1e-9 * noise;
                noise = next;
                if done {
                    break;
                }
            }
            noise
        }
    };

    let precision = &gram / noise + &identity * config.prior_precision;
    let chol = Cholesky::new(precision).ok_or(Error::DegenerateModel { jitter: 0.0 })?;
    let cov = chol.inverse();
    let mean = &cov * &phi_y / noise;
    Ok(BocsModel {
        d,
        mean,
        cov,
        offset,
        scale,
        noise_variance: noise,
    })
}

/// One Thompson draw of the coefficients. Falls back to the posterior mean
/// when the covariance cannot be factorized.
pub fn sample_acquisition<R: Rng + ?Sized>(m: &BocsModel, rng: &mut R) -> Vec<f64> {
    let p = m.mean.len();
    let sym = (&m.cov + m.cov.transpose()) * 0.5;
    match Cholesky::new(sym) {
        Some(chol) => {
            let z = DVector::from_iterator(p, (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let draw = &m.mean + chol.l() * z;
            draw.as_slice().to_vec()
        }
        None => {
            log::warn!("coefficient covariance is not positive definite; using the posterior mean");
            m.mean.as_slice().to_vec()
        }
    }
}

/// Simulated annealing over `{0,1}^d` for the quadratic `coeffs`, returning
/// the best vector visited.
pub fn sa_maximize<R: Rng + ?Sized>(coeffs: &[f64], d: usize, schedule: &AnnealSchedule, rng: &mut R) -> Vec<bool> {
    assert!(d >= 1, "annealing needs at least one bit");
    assert_eq!(coeffs.len(), n_features(d), "coefficient count does not match dimension");
    let mut x: Vec<bool> = (0..d).map(|_| rng.random::<bool>()).collect();
    let mut value = quadratic_value(coeffs, &x);
    let mut best = x.clone();
    let mut best_value = value;
    let mut temperature = schedule.initial_temperature;
    for _ in 0..schedule.sweeps {
        for i in 0..d {
            x[i] = !x[i];
            let candidate = quadratic_value(coeffs, &x);
            let delta = candidate - value;
            let accept = delta >= 0.0 || rng.random::<f64>() < libm::exp(delta / temperature);
            if accept {
                value = candidate;
                if value > best_value {
                    best_value = value;
                    best.clone_from(&x);
                }
            } else {
                x[i] = !x[i];
            }
        }
        temperature *= schedule.cooling_rate;
    }
    best
}

/// Next structural configuration given `(structure, f)` history.
///
/// The first `n_init` proposals walk a seeded permutation of all sixteen
/// vectors, skipping ones already tried; afterwards the model is fitted,
/// sampled and annealed. Re-proposing a tried vector is allowed.
pub fn propose_structural<R: Rng + ?Sized>(
    history: &[(StructuralParams, f64)],
    config: &BocsConfig,
    rng: &mut R,
) -> Result<StructuralParams> {
    if history.len() < config.n_init {
        let mut order = all_structures();
        order.shuffle(rng);
        if let Some(p) = order.into_iter().find(|p| !history.iter().any(|(h, _)| h == p)) {
            return Ok(p);
        }
    }
    let observations: Vec<(Vec<bool>, f64)> = history.iter().map(|(p, f)| (encode(p).to_vec(), *f)).collect();
    let model = fit_bocs(&observations, config)?;
    let coeffs = sample_acquisition(&model, rng);
    let bits = sa_maximize(&coeffs, N_STRUCTURAL_BITS, &config.schedule, rng);
    decode(&bits)
}
