//! Two-tier hyper-parameter optimization for tabular reinforcement learning.
//!
//! The structural tier searches the four binary design choices of the learner
//! (algorithm, eligibility traces, exploration policy, epsilon decay) with a
//! Thompson-sampled second-order binary regression model maximized by
//! simulated annealing. The real-valued tier then freezes the best structure
//! and tunes the remaining hyper-parameters with a Gaussian process and
//! expected improvement. Random search and single-tier Bayesian optimization
//! are included as baselines, along with the tabular agents and the
//! discretized cart-pole task used to score hyper-parameter settings.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bocs;
pub mod cartpole;
pub mod error;
pub mod gp;
pub mod params;
pub mod rl;
pub mod seed;
pub mod space;
pub mod tuner;

pub use error::{Error, Result};
pub use params::{Algorithm, AlgorithmParams, HyperParamPoint, Policy, StructuralParams};
