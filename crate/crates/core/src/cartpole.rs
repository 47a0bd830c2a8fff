//! Discretized cart-pole balancing task.
//!
//! Physics follow the classic cart-pole equations with explicit Euler
//! integration. Each surviving step pays +1, a fall pays -200 (replacing the
//! +1), and episodes are truncated after 200 steps.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::rl::{EnvStep, Environment};

pub const X_THRESHOLD: f64 = 2.4;
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * core::f64::consts::PI / 360.0;
pub const MAX_STEPS: u32 = 200;
pub const SURVIVE_REWARD: f64 = 1.0;
pub const FAIL_REWARD: f64 = -200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Left,
    Right,
}

impl Action {
    pub fn from_index(a: usize) -> Self {
        if a == 0 {
            Action::Left
        } else {
            Action::Right
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnvState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl EnvState {
    /// Position or angle bound violated.
    pub fn is_terminal(&self) -> bool {
        self.x.abs() > X_THRESHOLD || self.theta.abs() > THETA_THRESHOLD
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub gravity: f64,
    pub mass_cart: f64,
    pub mass_pole: f64,
    /// Half the pole length.
    pub length: f64,
    pub force_mag: f64,
    pub dt: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            mass_cart: 1.0,
            mass_pole: 0.1,
            length: 0.5,
            force_mag: 10.0,
            dt: 0.02,
        }
    }
}

impl Physics {
    /// One Euler step under `action`. Pure in `(state, action)`.
    pub fn advance(&self, s: &EnvState, action: Action) -> EnvState {
        let force = match action {
            Action::Left => -self.force_mag,
            Action::Right => self.force_mag,
        };
        self.advance_with_force(s, force)
    }

    /// One Euler step under an arbitrary horizontal force.
    pub fn advance_with_force(&self, s: &EnvState, force: f64) -> EnvState {
        let total_mass = self.mass_cart + self.mass_pole;
        let polemass_length = self.mass_pole * self.length;
        let (sin, cos) = (libm::sin(s.theta), libm::cos(s.theta));
        let temp = (force + polemass_length * s.theta_dot * s.theta_dot * sin) / total_mass;
        let theta_acc = (self.gravity * sin - cos * temp)
            / (self.length * (4.0 / 3.0 - self.mass_pole * cos * cos / total_mass));
        let x_acc = temp - polemass_length * theta_acc * cos / total_mass;
        EnvState {
            x: s.x + self.dt * s.x_dot,
            x_dot: s.x_dot + self.dt * x_acc,
            theta: s.theta + self.dt * s.theta_dot,
            theta_dot: s.theta_dot + self.dt * theta_acc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub state: EnvState,
    pub reward: f64,
    pub terminal: bool,
    pub truncated: bool,
}

/// Uniform-bin discretizer over (x, x_dot, theta, theta_dot).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretizer {
    pub n_bins: u32,
    pub n_bins_angle: u32,
    /// Closed clip ranges per dimension, in state order.
    pub ranges: [(f64, f64); 4],
}

pub const DEFAULT_RANGES: [(f64, f64); 4] = [
    (-X_THRESHOLD, X_THRESHOLD),
    (-3.0, 3.0),
    (-THETA_THRESHOLD, THETA_THRESHOLD),
    (-3.5, 3.5),
];

impl Discretizer {
    pub fn new(n_bins: u32, n_bins_angle: u32) -> Result<Self> {
        Self::with_ranges(n_bins, n_bins_angle, DEFAULT_RANGES)
    }

    pub fn with_ranges(n_bins: u32, n_bins_angle: u32, ranges: [(f64, f64); 4]) -> Result<Self> {
        if n_bins == 0 || n_bins_angle == 0 {
            return Err(invalid("n_bins", "bin counts must be positive"));
        }
        if ranges.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(invalid("ranges", "every clip range needs lower < upper"));
        }
        Ok(Self {
            n_bins,
            n_bins_angle,
            ranges,
        })
    }

    fn radices(&self) -> [u32; 4] {
        [self.n_bins, self.n_bins, self.n_bins_angle, self.n_bins_angle]
    }

    pub fn n_states(&self) -> usize {
        self.radices().iter().map(|&r| r as usize).product()
    }

    /// Left-closed uniform bin of `v` in dimension `dim`; out-of-range values
    /// land in the edge bins.
    pub fn bin(&self, dim: usize, v: f64) -> u32 {
        let (lo, hi) = self.ranges[dim];
        let n = self.radices()[dim];
        let clipped = v.clamp(lo, hi);
        let idx = libm::floor((clipped - lo) / (hi - lo) * n as f64);
        (idx.max(0.0) as u32).min(n - 1)
    }

    pub fn bins(&self, s: &EnvState) -> [u32; 4] {
        let v = s.as_array();
        core::array::from_fn(|d| self.bin(d, v[d]))
    }

    /// Mixed-radix id of a bin tuple (x most significant).
    pub fn encode(&self, bins: [u32; 4]) -> usize {
        self.radices()
            .iter()
            .zip(bins)
            .fold(0usize, |acc, (&r, b)| acc * r as usize + b as usize)
    }

    pub fn decode(&self, mut id: usize) -> [u32; 4] {
        let radices = self.radices();
        let mut out = [0u32; 4];
        for d in (0..4).rev() {
            out[d] = (id % radices[d] as usize) as u32;
            id /= radices[d] as usize;
        }
        out
    }

    pub fn discretize(&self, s: &EnvState) -> usize {
        self.encode(self.bins(s))
    }
}

/// Cart-pole episode state: physics plus the step counter.
#[derive(Debug, Clone)]
pub struct CartPole {
    pub physics: Physics,
    state: EnvState,
    steps: u32,
    done: bool,
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new(Physics::default())
    }
}

impl CartPole {
    pub fn new(physics: Physics) -> Self {
        Self {
            physics,
            state: EnvState::default(),
            steps: 0,
            done: true,
        }
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// Draws each component uniformly from [-0.05, 0.05].
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> EnvState {
        let mut draw = || rng.random_range(-0.05..=0.05);
        self.state = EnvState {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
        };
        self.steps = 0;
        self.done = false;
        self.state
    }

    /// Starts an episode from a given state.
    pub fn reset_to(&mut self, state: EnvState) {
        self.state = state;
        self.steps = 0;
        self.done = false;
    }

    /// Advances one step.
    ///
    /// # Panics
    /// When the episode has already ended.
    pub fn step(&mut self, action: Action) -> StepResult {
        assert!(!self.done, "cart-pole stepped after the episode ended");
        self.state = self.physics.advance(&self.state, action);
        self.steps += 1;
        let terminal = self.state.is_terminal();
        let truncated = !terminal && self.steps >= MAX_STEPS;
        self.done = terminal || truncated;
        StepResult {
            state: self.state,
            reward: if terminal { FAIL_REWARD } else { SURVIVE_REWARD },
            terminal,
            truncated,
        }
    }
}

/// Cart-pole seen through a discretizer, as a tabular environment.
#[derive(Debug, Clone)]
pub struct DiscreteCartPole {
    pub env: CartPole,
    pub discretizer: Discretizer,
}

impl DiscreteCartPole {
    pub fn new(n_bins: u32, n_bins_angle: u32) -> Result<Self> {
        Ok(Self {
            env: CartPole::default(),
            discretizer: Discretizer::new(n_bins, n_bins_angle)?,
        })
    }
}

impl Environment for DiscreteCartPole {
    fn n_states(&self) -> usize {
        self.discretizer.n_states()
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let s = self.env.reset(rng);
        self.discretizer.discretize(&s)
    }

    fn step(&mut self, action: usize) -> EnvStep {
        let out = self.env.step(Action::from_index(action));
        EnvStep {
            state: self.discretizer.discretize(&out.state),
            reward: out.reward,
            terminal: out.terminal,
            truncated: out.truncated,
        }
    }
}
