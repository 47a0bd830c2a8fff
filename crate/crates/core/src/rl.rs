//! Tabular Q-learning and SARSA agents with optional replacing eligibility
//! traces, driven by an epsilon-greedy or Boltzmann (softmax) policy.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::params::{Algorithm, AlgorithmParams, Policy, StructuralParams};

/// Options that are not tuned but change agent behaviour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentOptions {
    /// Epsilon decay never takes epsilon below this value.
    pub epsilon_floor: f64,
    /// When exploring, draw from all actions instead of only the non-greedy ones.
    pub explore_includes_greedy: bool,
    /// Zero the traces after a non-greedy action when learning off-policy.
    pub watkins_cutoff: bool,
}

impl Default for AgentOptions {
    fn default() -> Self {
        Self {
            epsilon_floor: 0.01,
            explore_includes_greedy: false,
            watkins_cutoff: true,
        }
    }
}

/// Dense action-value table, zero-initialized.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.n_actions + a] = v;
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_greedy(&self, s: usize, a: usize) -> bool {
        self.get(s, a) >= self.max(s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Eligibility values with the same shape as the Q-table.
///
/// Nonzero entries are tracked in `active` so that updates touch only the
/// pairs visited since the last reset instead of the whole table.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    n_actions: usize,
    values: Vec<f64>,
    active: Vec<usize>,
}

impl TraceTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_actions,
            values: vec![0.0; n_states * n_actions],
            active: Vec::new(),
        }
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    /// Replacing trace: the visited pair is set to one.
    pub fn visit(&mut self, s: usize, a: usize) {
        let i = s * self.n_actions + a;
        if self.values[i] == 0.0 && !self.active.contains(&i) {
            self.active.push(i);
        }
        self.values[i] = 1.0;
    }

    pub fn scale(&mut self, factor: f64) {
        for &i in &self.active {
            self.values[i] *= factor;
        }
    }

    pub fn clear(&mut self) {
        for &i in &self.active {
            self.values[i] = 0.0;
        }
        self.active.clear();
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Picks uniformly among the maximizers of `row`.
pub fn greedy_action<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = row.iter().filter(|&&v| v == max).count();
    if ties <= 1 {
        return row.iter().position(|&v| v == max).unwrap_or(0);
    }
    let pick = rng.random_range(0..ties);
    row.iter()
        .enumerate()
        .filter(|(_, &v)| v == max)
        .nth(pick)
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Boltzmann distribution over `row` at temperature `tau`, written to `out`.
pub fn softmax_probabilities(row: &[f64], tau: f64, out: &mut Vec<f64>) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    out.extend(row.iter().map(|&q| libm::exp((q - max) / tau)));
    let total: f64 = out.iter().sum();
    for p in out.iter_mut() {
        *p /= total;
    }
}

fn sample_softmax<R: Rng + ?Sized>(row: &[f64], tau: f64, rng: &mut R) -> usize {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights = [0.0f64; 8];
    let mut heap;
    let w: &mut [f64] = if row.len() <= weights.len() {
        &mut weights[..row.len()]
    } else {
        heap = vec![0.0; row.len()];
        &mut heap
    };
    let mut total = 0.0;
    for (wi, &q) in w.iter_mut().zip(row) {
        *wi = libm::exp((q - max) / tau);
        total += *wi;
    }
    let mut u = rng.random::<f64>() * total;
    for (a, &wi) in w.iter().enumerate() {
        if u < wi {
            return a;
        }
        u -= wi;
    }
    row.len() - 1
}

/// Chooses an action in state `s` under the configured exploration policy.
///
/// Epsilon-greedy explores with probability epsilon by drawing uniformly from
/// the actions other than the greedy one (with two actions exploration always
/// flips), unless `explore_includes_greedy` is set.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    s: usize,
    structural: &StructuralParams,
    params: &AlgorithmParams,
    options: &AgentOptions,
    rng: &mut R,
) -> usize {
    let row = q.row(s);
    match structural.policy {
        Policy::Softmax => sample_softmax(row, params.tau, rng),
        Policy::EpsilonGreedy => {
            let explore = params.epsilon > 0.0 && rng.random::<f64>() < params.epsilon;
            if !explore {
                return greedy_action(row, rng);
            }
            let n = row.len();
            if options.explore_includes_greedy || n == 1 {
                return rng.random_range(0..n);
            }
            let greedy = greedy_action(row, rng);
            let pick = rng.random_range(0..n - 1);
            if pick >= greedy {
                pick + 1
            } else {
                pick
            }
        }
    }
}

/// One observed transition. `next` is `None` when the episode failed, so the
/// bootstrap term is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next: Option<(usize, usize)>,
}

/// Temporal-difference update of `q` (and `traces`, when present).
///
/// Q-learning bootstraps from `max_b Q(s', b)`, SARSA from `Q(s', a')`.
/// Returns the TD error.
///
/// # Panics
/// On a non-finite TD error.
pub fn td_update(
    q: &mut QTable,
    traces: Option<&mut TraceTable>,
    t: &Transition,
    structural: &StructuralParams,
    params: &AlgorithmParams,
    options: &AgentOptions,
) -> f64 {
    let target = match (t.next, structural.algorithm) {
        (None, _) => 0.0,
        (Some((s1, _)), Algorithm::QLearning) => q.max(s1),
        (Some((s1, a1)), Algorithm::Sarsa) => q.get(s1, a1),
    };
    let delta = t.reward + params.gamma * target - q.get(t.state, t.action);
    assert!(
        delta.is_finite(),
        "non-finite TD error at state {} action {}",
        t.state,
        t.action
    );

    match traces {
        None => {
            let v = q.get(t.state, t.action) + params.alpha * delta;
            q.set(t.state, t.action, v);
        }
        Some(e) => {
            e.visit(t.state, t.action);
            let step = params.alpha * delta;
            for &i in &e.active {
                q.values[i] += step * e.values[i];
            }
            e.scale(params.gamma * params.lambda);
            let cut = match t.next {
                None => true,
                Some((s1, a1)) => {
                    options.watkins_cutoff
                        && structural.algorithm == Algorithm::QLearning
                        && !q.is_greedy(s1, a1)
                }
            };
            if cut {
                e.clear();
            }
        }
    }
    delta
}

/// Epsilon after one episode: multiplied by the decay rate when decay is
/// active, never below `floor` (a starting value already under the floor is
/// left alone).
pub fn decay_epsilon(epsilon: f64, structural: &StructuralParams, rate: f64, floor: f64) -> f64 {
    if !structural.decays_epsilon() || epsilon <= floor {
        return epsilon;
    }
    (epsilon * rate).max(floor)
}

/// Result of one environment step as seen by the agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvStep {
    pub state: usize,
    pub reward: f64,
    /// The episode failed; no bootstrapping.
    pub terminal: bool,
    /// The time limit fired; the episode ends but the state is not terminal.
    pub truncated: bool,
}

/// Episodic environment with a finite, discrete state space.
pub trait Environment {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize;
    fn step(&mut self, action: usize) -> EnvStep;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub total_reward: f64,
    pub steps: u32,
}

/// A tabular learner; all knowledge lives in its Q-table.
#[derive(Debug, Clone)]
pub struct Agent {
    structural: StructuralParams,
    params: AlgorithmParams,
    options: AgentOptions,
    q: QTable,
    traces: Option<TraceTable>,
}

impl Agent {
    pub fn new(
        structural: StructuralParams,
        params: AlgorithmParams,
        options: AgentOptions,
        n_states: usize,
        n_actions: usize,
    ) -> Result<Self> {
        params.validate()?;
        if n_states == 0 || n_actions == 0 {
            return Err(invalid("n_states", "state and action counts must be positive"));
        }
        let traces = structural
            .eligibility_traces
            .then(|| TraceTable::new(n_states, n_actions));
        Ok(Self {
            structural,
            params,
            options,
            q: QTable::new(n_states, n_actions),
            traces,
        })
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    pub fn params(&self) -> &AlgorithmParams {
        &self.params
    }

    fn act<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        select_action(&self.q, s, &self.structural, &self.params, &self.options, rng)
    }

    /// Runs one episode to failure or truncation, learning online, then
    /// applies epsilon decay.
    pub fn run_episode<E: Environment, R: Rng + ?Sized>(
        &mut self,
        env: &mut E,
        rng: &mut R,
    ) -> EpisodeOutcome {
        if let Some(e) = self.traces.as_mut() {
            e.clear();
        }
        let mut s = env.reset(rng);
        let mut a = self.act(s, rng);
        let mut total = 0.0;
        let mut steps = 0u32;
        loop {
            let out = env.step(a);
            total += out.reward;
            steps += 1;
            let next = if out.terminal {
                None
            } else {
                Some((out.state, self.act(out.state, rng)))
            };
            let t = Transition {
                state: s,
                action: a,
                reward: out.reward,
                next,
            };
            td_update(
                &mut self.q,
                self.traces.as_mut(),
                &t,
                &self.structural,
                &self.params,
                &self.options,
            );
            match next {
                Some((s1, a1)) if !out.truncated => {
                    s = s1;
                    a = a1;
                }
                _ => break,
            }
        }
        self.params.epsilon = decay_epsilon(
            self.params.epsilon,
            &self.structural,
            self.params.epsilon_decay_rate,
            self.options.epsilon_floor,
        );
        EpisodeOutcome {
            total_reward: total,
            steps,
        }
    }

    /// Greedy action per state, first index on ties.
    pub fn greedy_policy(&self) -> Vec<usize> {
        (0..self.q.n_states())
            .map(|s| {
                let row = self.q.row(s);
                let max = self.q.max(s);
                row.iter().position(|&v| v == max).unwrap_or(0)
            })
            .collect()
    }
}
