//! Hyper-parameter types shared by the agents, the environment and the tuners.

use core::fmt;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    QLearning,
    Sarsa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    EpsilonGreedy,
    Softmax,
}

/// The four categorical choices that define the shape of the learner.
///
/// `epsilon_decay` is stored for every policy so that all sixteen bit vectors
/// are representable; it only has an effect under [`Policy::EpsilonGreedy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StructuralParams {
    pub algorithm: Algorithm,
    pub eligibility_traces: bool,
    pub policy: Policy,
    pub epsilon_decay: bool,
}

impl Default for StructuralParams {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::QLearning,
            eligibility_traces: false,
            policy: Policy::EpsilonGreedy,
            epsilon_decay: false,
        }
    }
}

impl StructuralParams {
    pub fn decays_epsilon(&self) -> bool {
        self.policy == Policy::EpsilonGreedy && self.epsilon_decay
    }
}

impl fmt::Display for StructuralParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let alg = match self.algorithm {
            Algorithm::QLearning => "q-learning",
            Algorithm::Sarsa => "sarsa",
        };
        let pol = match self.policy {
            Policy::EpsilonGreedy => "epsilon-greedy",
            Policy::Softmax => "softmax",
        };
        write!(
            f,
            "{alg}, traces={}, {pol}, decay={}",
            self.eligibility_traces, self.epsilon_decay
        )
    }
}

pub const MIN_BINS: u32 = 5;
pub const MAX_BINS: u32 = 20;

/// Real-valued (and bin-count) hyper-parameters of one learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub tau: f64,
    pub lambda: f64,
    pub epsilon_decay_rate: f64,
    pub n_bins: u32,
    pub n_bins_angle: u32,
}

impl Default for AlgorithmParams {
    /// Prior algorithm hyper-parameters used by the structural tier.
    fn default() -> Self {
        Self {
            alpha: 0.5,
            epsilon: 0.1,
            gamma: 0.95,
            tau: 1.0,
            lambda: 0.9,
            epsilon_decay_rate: 0.99,
            n_bins: 10,
            n_bins_angle: 10,
        }
    }
}

fn unit_closed(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(name, alloc::format!("{v} outside [0, 1]")))
    }
}

impl AlgorithmParams {
    /// Checks every bound. The optimizers only propose interior points; the
    /// closed ends of the unit ranges are accepted so that degenerate settings
    /// (greedy policy, frozen learning) stay expressible.
    pub fn validate(&self) -> Result<()> {
        unit_closed("alpha", self.alpha)?;
        unit_closed("epsilon", self.epsilon)?;
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid("gamma", alloc::format!("{} outside [0, 1)", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau", alloc::format!("{} is not a positive temperature", self.tau)));
        }
        unit_closed("lambda", self.lambda)?;
        if !(self.epsilon_decay_rate > 0.0 && self.epsilon_decay_rate <= 1.0) {
            return Err(invalid(
                "epsilon_decay_rate",
                alloc::format!("{} outside (0, 1]", self.epsilon_decay_rate),
            ));
        }
        for (name, bins) in [("n_bins", self.n_bins), ("n_bins_angle", self.n_bins_angle)] {
            if !(MIN_BINS..=MAX_BINS).contains(&bins) {
                return Err(invalid(
                    name,
                    alloc::format!("{bins} outside [{MIN_BINS}, {MAX_BINS}]"),
                ));
            }
        }
        Ok(())
    }
}

/// Rounds a continuous proposal to an integer, ties to even.
pub fn round_half_even(v: f64) -> f64 {
    libm::rint(v)
}

/// One full assignment of structural and algorithm hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParamPoint {
    pub structural: StructuralParams,
    pub algorithm: AlgorithmParams,
}

impl HyperParamPoint {
    pub fn new(structural: StructuralParams, algorithm: AlgorithmParams) -> Result<Self> {
        algorithm.validate()?;
        Ok(Self {
            structural,
            algorithm,
        })
    }

    /// Bit-exact identity, used for history lookup.
    pub fn same_as(&self, other: &Self) -> bool {
        let a = &self.algorithm;
        let b = &other.algorithm;
        self.structural == other.structural
            && a.alpha.to_bits() == b.alpha.to_bits()
            && a.epsilon.to_bits() == b.epsilon.to_bits()
            && a.gamma.to_bits() == b.gamma.to_bits()
            && a.tau.to_bits() == b.tau.to_bits()
            && a.lambda.to_bits() == b.lambda.to_bits()
            && a.epsilon_decay_rate.to_bits() == b.epsilon_decay_rate.to_bits()
            && a.n_bins == b.n_bins
            && a.n_bins_angle == b.n_bins_angle
    }
}
