//! Box-shaped search spaces over the real-valued hyper-parameters.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::params::{round_half_even, AlgorithmParams, Policy, StructuralParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Dimension {
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

impl Dimension {
    pub fn real(name: &'static str, lower: f64, upper: f64) -> Self {
        Self { name, lower, upper, integer: false }
    }

    pub fn integer(name: &'static str, lower: f64, upper: f64) -> Self {
        Self { name, lower, upper, integer: true }
    }

    fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Axis-aligned box. Optimizers work in the unit cube; [`BoxSpace::denormalize`]
/// maps back and rounds integer dimensions half-to-even.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSpace {
    dims: Vec<Dimension>,
}

impl BoxSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Config("search box has no dimensions".into()));
        }
        for d in &dims {
            if !(d.lower < d.upper) || !d.lower.is_finite() || !d.upper.is_finite() {
                return Err(Error::Config(alloc::format!(
                    "dimension `{}`: lower {} >= upper {}",
                    d.name,
                    d.lower,
                    d.upper
                )));
            }
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(x)
            .map(|(d, &v)| ((v - d.lower) / d.width()).clamp(0.0, 1.0))
            .collect()
    }

    pub fn denormalize(&self, u: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(u)
            .map(|(d, &v)| {
                let raw = d.lower + v.clamp(0.0, 1.0) * d.width();
                if d.integer {
                    round_half_even(raw).clamp(d.lower, d.upper)
                } else {
                    raw
                }
            })
            .collect()
    }

    /// Uniform point in the box (integer dimensions uniform over their values).
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.dims
            .iter()
            .map(|d| {
                if d.integer {
                    rng.random_range(d.lower as i64..=d.upper as i64) as f64
                } else {
                    rng.random_range(d.lower..d.upper)
                }
            })
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims.len()
            && self
                .dims
                .iter()
                .zip(x)
                .all(|(d, &v)| v >= d.lower && v <= d.upper)
    }
}

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// Randomly shifted Halton points in the unit cube.
#[derive(Debug, Clone)]
pub struct Halton {
    shift: Vec<f64>,
    next: u64,
}

impl Halton {
    pub fn new<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sequence supports up to {} dimensions", PRIMES.len());
        Self {
            shift: (0..dim).map(|_| rng.random::<f64>()).collect(),
            next: 1,
        }
    }
}

impl Iterator for Halton {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let i = self.next;
        self.next += 1;
        Some(
            self.shift
                .iter()
                .zip(PRIMES)
                .map(|(&s, p)| {
                    let v = radical_inverse(i, p) + s;
                    v - libm::floor(v)
                })
                .collect(),
        )
    }
}

/// Tunable real-valued hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Alpha,
    Epsilon,
    Gamma,
    Tau,
    NBins,
    NBinsAngle,
}

impl Param {
    pub const ALL: [Param; 6] = [
        Param::Alpha,
        Param::Epsilon,
        Param::Gamma,
        Param::Tau,
        Param::NBins,
        Param::NBinsAngle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Alpha => "alpha",
            Param::Epsilon => "epsilon",
            Param::Gamma => "gamma",
            Param::Tau => "tau",
            Param::NBins => "n_bins",
            Param::NBinsAngle => "n_bins_angle",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Param::NBins | Param::NBinsAngle)
    }

    fn set(self, p: &mut AlgorithmParams, v: f64) {
        match self {
            Param::Alpha => p.alpha = v,
            Param::Epsilon => p.epsilon = v,
            Param::Gamma => p.gamma = v,
            Param::Tau => p.tau = v,
            Param::NBins => p.n_bins = v as u32,
            Param::NBinsAngle => p.n_bins_angle = v as u32,
        }
    }

    fn get(self, p: &AlgorithmParams) -> f64 {
        match self {
            Param::Alpha => p.alpha,
            Param::Epsilon => p.epsilon,
            Param::Gamma => p.gamma,
            Param::Tau => p.tau,
            Param::NBins => p.n_bins as f64,
            Param::NBinsAngle => p.n_bins_angle as f64,
        }
    }
}

/// Search bounds for every tunable parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBounds {
    pub alpha: (f64, f64),
    pub epsilon: (f64, f64),
    pub gamma: (f64, f64),
    pub tau: (f64, f64),
    pub n_bins: (f64, f64),
    pub n_bins_angle: (f64, f64),
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self {
            alpha: (0.001, 0.999),
            epsilon: (0.001, 0.999),
            gamma: (0.001, 0.999),
            tau: (0.05, 5.0),
            n_bins: (5.0, 20.0),
            n_bins_angle: (5.0, 20.0),
        }
    }
}

impl SearchBounds {
    pub fn get(&self, p: Param) -> (f64, f64) {
        match p {
            Param::Alpha => self.alpha,
            Param::Epsilon => self.epsilon,
            Param::Gamma => self.gamma,
            Param::Tau => self.tau,
            Param::NBins => self.n_bins,
            Param::NBinsAngle => self.n_bins_angle,
        }
    }

    /// Parameters that matter under `structural`: epsilon only for
    /// epsilon-greedy, tau only for softmax.
    pub fn active_params(structural: &StructuralParams) -> Vec<Param> {
        Param::ALL
            .into_iter()
            .filter(|p| match p {
                Param::Epsilon => structural.policy == Policy::EpsilonGreedy,
                Param::Tau => structural.policy == Policy::Softmax,
                _ => true,
            })
            .collect()
    }

    pub fn space(&self, params: &[Param]) -> Result<BoxSpace> {
        BoxSpace::new(
            params
                .iter()
                .map(|&p| {
                    let (lo, hi) = self.get(p);
                    if p.is_integer() {
                        Dimension::integer(p.name(), lo, hi)
                    } else {
                        Dimension::real(p.name(), lo, hi)
                    }
                })
                .collect(),
        )
    }
}

/// Writes `values` (real-space, in `params` order) over `base`.
pub fn apply(params: &[Param], values: &[f64], base: &AlgorithmParams) -> AlgorithmParams {
    let mut out = *base;
    for (&p, &v) in params.iter().zip(values) {
        p.set(&mut out, v);
    }
    out
}

pub fn extract(params: &[Param], p: &AlgorithmParams) -> Vec<f64> {
    params.iter().map(|&k| k.get(p)).collect()
}
