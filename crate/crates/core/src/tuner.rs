//! Campaign drivers: the two-tier optimizer and the random-search and
//! single-tier Bayesian optimization baselines.
//!
//! Every campaign spends a fixed budget of objective evaluations
//! ("meta-episodes"). Evaluation `i` of a campaign always receives the seed
//! `derive(campaign_seed, EVALUATION, i)`, so all optimizers face the same
//! stochastic objective at a given position in their budget.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::bocs::{self, BocsConfig};
use crate::cartpole::DiscreteCartPole;
use crate::error::{Error, Result};
use crate::gp::{self, GpConfig, GpModel, ProposalConfig};
use crate::params::{AlgorithmParams, HyperParamPoint, StructuralParams};
use crate::rl::{Agent, AgentOptions, Environment};
use crate::seed::{self, tag};
use crate::space::{self, BoxSpace, Halton, Param, SearchBounds};

/// Source of wall-clock time in seconds.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// A clock that never advances; keeps results bit-reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

/// One meta-episode: a fresh agent trained for a fixed number of episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaEpisodeResult {
    pub point: HyperParamPoint,
    /// Mean episode reward.
    pub f_value: f64,
    pub episode_rewards: Vec<f64>,
    pub seed: u64,
    pub wall_time: f64,
}

impl MetaEpisodeResult {
    pub fn from_rewards(point: HyperParamPoint, episode_rewards: Vec<f64>, seed: u64, wall_time: f64) -> Self {
        let f_value = if episode_rewards.is_empty() {
            0.0
        } else {
            episode_rewards.iter().sum::<f64>() / episode_rewards.len() as f64
        };
        Self {
            point,
            f_value,
            episode_rewards,
            seed,
            wall_time,
        }
    }
}

/// Trains a fresh agent with `point` for `episodes` episodes on cart-pole
/// and reports the mean episode reward. Deterministic in `(point, seed)`
/// apart from the wall time.
pub fn evaluate_f<C: Clock + ?Sized>(
    point: &HyperParamPoint,
    episodes: usize,
    seed: u64,
    options: &AgentOptions,
    clock: &C,
) -> Result<MetaEpisodeResult> {
    if episodes == 0 {
        return Err(Error::Config("a meta-episode needs at least one episode".into()));
    }
    let start = clock.seconds();
    let a = &point.algorithm;
    let mut env = DiscreteCartPole::new(a.n_bins, a.n_bins_angle)?;
    let mut agent = Agent::new(point.structural, *a, *options, env.n_states(), env.n_actions())?;
    let mut rng = seed::rng_from(seed);
    let rewards = (0..episodes)
        .map(|_| agent.run_episode(&mut env, &mut rng).total_reward)
        .collect();
    Ok(MetaEpisodeResult::from_rewards(*point, rewards, seed, clock.seconds() - start))
}

/// Anything that scores a hyper-parameter point.
pub trait Objective {
    fn evaluate(&mut self, point: &HyperParamPoint, seed: u64) -> Result<MetaEpisodeResult>;
}

/// The cart-pole meta-episode objective.
#[derive(Debug, Clone)]
pub struct CartPoleObjective<C = NoClock> {
    pub episodes: usize,
    pub options: AgentOptions,
    pub clock: C,
}

impl CartPoleObjective<NoClock> {
    pub fn new(episodes: usize) -> Self {
        Self {
            episodes,
            options: AgentOptions::default(),
            clock: NoClock,
        }
    }
}

impl<C: Clock> Objective for CartPoleObjective<C> {
    fn evaluate(&mut self, point: &HyperParamPoint, seed: u64) -> Result<MetaEpisodeResult> {
        evaluate_f(point, self.episodes, seed, &self.options, &self.clock)
    }
}

/// Wraps a closure `(point, seed) -> f` as an objective with one "episode".
pub struct FnObjective<F>(pub F);

impl<F: FnMut(&HyperParamPoint, u64) -> f64> Objective for FnObjective<F> {
    fn evaluate(&mut self, point: &HyperParamPoint, seed: u64) -> Result<MetaEpisodeResult> {
        let f = (self.0)(point, seed);
        Ok(MetaEpisodeResult::from_rewards(*point, alloc::vec![f], seed, 0.0))
    }
}

/// Append-only list of meta-episode results.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservationSet {
    entries: Vec<MetaEpisodeResult>,
}

impl ObservationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: MetaEpisodeResult) {
        self.entries.push(r);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MetaEpisodeResult] {
        &self.entries
    }

    /// Highest f; the earliest entry wins ties.
    pub fn best(&self) -> Option<&MetaEpisodeResult> {
        best_of(self.entries.iter())
    }
}

fn best_of<'a>(it: impl Iterator<Item = &'a MetaEpisodeResult>) -> Option<&'a MetaEpisodeResult> {
    it.fold(None, |acc: Option<&MetaEpisodeResult>, r| match acc {
        Some(b) if b.f_value >= r.f_value => Some(b),
        _ => Some(r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OptimizerKind {
    TwoTier,
    RandomSearch,
    MonolithicBo,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [
        OptimizerKind::TwoTier,
        OptimizerKind::RandomSearch,
        OptimizerKind::MonolithicBo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::TwoTier => "two_tier",
            OptimizerKind::RandomSearch => "random",
            OptimizerKind::MonolithicBo => "mono_bo",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn stream_tag(self) -> u64 {
        match self {
            OptimizerKind::TwoTier => tag::TWO_TIER,
            OptimizerKind::RandomSearch => tag::RANDOM_SEARCH,
            OptimizerKind::MonolithicBo => tag::MONOLITHIC,
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a point came to be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Structural-tier proposal (seeded initial design or BOCS).
    Structural,
    /// Expected-improvement proposal.
    ExpectedImprovement,
    /// Space-filling warm-start point.
    InitialDesign,
    /// Uniform random draw (random search, or fallback for a degenerate model).
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub index: usize,
    pub origin: Origin,
    pub result: MetaEpisodeResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningReport {
    pub optimizer: OptimizerKind,
    pub campaign_seed: u64,
    /// Every objective call, in order.
    pub evaluations: Vec<Evaluation>,
    /// Structural-tier observations (two-tier only).
    pub structural_history: ObservationSet,
    /// Real-valued-tier observations; for two-tier the first entry is the
    /// structural incumbent.
    pub real_history: ObservationSet,
    pub structural_proposals: usize,
    pub ei_proposals: usize,
    pub model_fallbacks: usize,
}

impl TuningReport {
    fn new(optimizer: OptimizerKind, campaign_seed: u64) -> Self {
        Self {
            optimizer,
            campaign_seed,
            evaluations: Vec::new(),
            structural_history: ObservationSet::new(),
            real_history: ObservationSet::new(),
            structural_proposals: 0,
            ei_proposals: 0,
            model_fallbacks: 0,
        }
    }

    /// Best evaluation, earliest on ties.
    pub fn best(&self) -> Option<&MetaEpisodeResult> {
        best_of(self.evaluations.iter().map(|e| &e.result))
    }

    /// Running maximum of f over the evaluations.
    pub fn incumbent_trace(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.evaluations
            .iter()
            .map(|e| {
                best = best.max(e.result.f_value);
                best
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunerConfig {
    pub budget: usize,
    /// Structural-tier evaluations of the two-tier optimizer.
    pub n_structural: usize,
    /// Real-valued-tier evaluations of the two-tier optimizer.
    pub n_real: usize,
    /// Prior algorithm hyper-parameters; also supplies the untuned ones.
    pub prior: AlgorithmParams,
    /// Fixed structure of the single-tier baseline.
    pub baseline_structure: StructuralParams,
    pub bounds: SearchBounds,
    pub bocs: BocsConfig,
    pub gp: GpConfig,
    pub proposal: ProposalConfig,
    /// Space-filling points before the first GP fit in the single-tier baseline.
    pub mono_initial: usize,
    /// Random search keeps the baseline structure instead of sampling it.
    pub rs_fix_structural: bool,
}

impl Default for TunerConfig {
    fn default() -> Self {
        Self {
            budget: 30,
            n_structural: 10,
            n_real: 20,
            prior: AlgorithmParams::default(),
            baseline_structure: StructuralParams::default(),
            bounds: SearchBounds::default(),
            bocs: BocsConfig::default(),
            gp: GpConfig::default(),
            proposal: ProposalConfig::default(),
            mono_initial: 5,
            rs_fix_structural: false,
        }
    }
}

impl TunerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if self.n_structural == 0 || self.n_real == 0 {
            return Err(Error::Config("both tiers need at least one evaluation".into()));
        }
        if self.n_structural + self.n_real != self.budget {
            return Err(Error::Config(alloc::format!(
                "n_structural ({}) + n_real ({}) != budget ({})",
                self.n_structural,
                self.n_real,
                self.budget
            )));
        }
        if self.mono_initial == 0 || self.mono_initial > self.budget {
            return Err(Error::Config(alloc::format!(
                "mono_initial ({}) must be in [1, budget]",
                self.mono_initial
            )));
        }
        self.prior.validate()?;
        self.bounds.space(&Param::ALL)?;
        Ok(())
    }
}

fn eval_seed(campaign_seed: u64, index: usize) -> u64 {
    seed::derive(campaign_seed, tag::EVALUATION, index as u64)
}

struct Campaign<'a, O: ?Sized> {
    objective: &'a mut O,
    report: TuningReport,
}

impl<O: Objective + ?Sized> Campaign<'_, O> {
    fn evaluate(&mut self, point: HyperParamPoint, origin: Origin) -> Result<MetaEpisodeResult> {
        let index = self.report.evaluations.len();
        let result = self
            .objective
            .evaluate(&point, eval_seed(self.report.campaign_seed, index))?;
        self.report.evaluations.push(Evaluation {
            index,
            origin,
            result: result.clone(),
        });
        Ok(result)
    }
}

/// Fits a GP to `history` in `space` and proposes the EI maximizer, or a
/// uniform point when the model is degenerate.
fn ei_proposal<R: Rng + ?Sized>(
    history: &ObservationSet,
    params: &[Param],
    space: &BoxSpace,
    config: &TunerConfig,
    fallbacks: &mut usize,
    rng: &mut R,
) -> (Vec<f64>, Origin) {
    let xs: Vec<Vec<f64>> = history
        .entries()
        .iter()
        .map(|r| space.normalize(&space::extract(params, &r.point.algorithm)))
        .collect();
    let ys: Vec<f64> = history.entries().iter().map(|r| r.f_value).collect();
    let f_best = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match GpModel::fit(&xs, &ys, &config.gp) {
        Ok(model) => (
            gp::propose_next(&model, space, f_best, &config.proposal, rng),
            Origin::ExpectedImprovement,
        ),
        Err(e) => {
            log::warn!("surrogate fit failed ({e}); proposing a uniform random point");
            *fallbacks += 1;
            (space.sample_uniform(rng), Origin::Random)
        }
    }
}

/// Structure first with the prior algorithm hyper-parameters, then the
/// real-valued hyper-parameters under the best structure found.
pub fn run_two_tier<O: Objective + ?Sized>(config: &TunerConfig, objective: &mut O, campaign_seed: u64) -> Result<TuningReport> {
    config.validate()?;
    let mut c = Campaign {
        objective,
        report: TuningReport::new(OptimizerKind::TwoTier, campaign_seed),
    };
    let stream = seed::derive(campaign_seed, OptimizerKind::TwoTier.stream_tag(), 0);

    for i in 0..config.n_structural {
        let history: Vec<(StructuralParams, f64)> = c
            .report
            .structural_history
            .entries()
            .iter()
            .map(|r| (r.point.structural, r.f_value))
            .collect();
        let mut rng = seed::stream(stream, tag::STRUCTURAL, i as u64);
        c.report.structural_proposals += 1;
        let structural = match bocs::propose_structural(&history, &config.bocs, &mut rng) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("structural surrogate failed ({e}); drawing a random structure");
                c.report.model_fallbacks += 1;
                let all = bocs::all_structures();
                all[rng.random_range(0..all.len())]
            }
        };
        let result = c.evaluate(HyperParamPoint::new(structural, config.prior)?, Origin::Structural)?;
        c.report.structural_history.push(result);
    }

    let incumbent = c
        .report
        .structural_history
        .best()
        .cloned()
        .expect("structural tier ran at least once");
    let frozen = incumbent.point.structural;
    c.report.real_history.push(incumbent);

    let params = SearchBounds::active_params(&frozen);
    let space = config.bounds.space(&params)?;
    for j in 0..config.n_real {
        let mut rng = seed::stream(stream, tag::REAL, j as u64);
        let (x, origin) = ei_proposal(
            &c.report.real_history,
            &params,
            &space,
            config,
            &mut c.report.model_fallbacks,
            &mut rng,
        );
        if origin == Origin::ExpectedImprovement {
            c.report.ei_proposals += 1;
        }
        let algorithm = space::apply(&params, &x, &config.prior);
        let result = c.evaluate(HyperParamPoint::new(frozen, algorithm)?, origin)?;
        c.report.real_history.push(result);
    }
    Ok(c.report)
}

/// Uniform sampling of structure and every real-valued hyper-parameter.
pub fn run_random_search<O: Objective + ?Sized>(
    config: &TunerConfig,
    objective: &mut O,
    campaign_seed: u64,
) -> Result<TuningReport> {
    config.validate()?;
    let mut c = Campaign {
        objective,
        report: TuningReport::new(OptimizerKind::RandomSearch, campaign_seed),
    };
    let mut rng = seed::stream(campaign_seed, OptimizerKind::RandomSearch.stream_tag(), 0);
    let space = config.bounds.space(&Param::ALL)?;
    let structures = bocs::all_structures();
    for _ in 0..config.budget {
        let structural = if config.rs_fix_structural {
            config.baseline_structure
        } else {
            structures[rng.random_range(0..structures.len())]
        };
        let x = space.sample_uniform(&mut rng);
        let algorithm = space::apply(&Param::ALL, &x, &config.prior);
        let result = c.evaluate(HyperParamPoint::new(structural, algorithm)?, Origin::Random)?;
        c.report.real_history.push(result);
    }
    Ok(c.report)
}

/// GP/EI over the real-valued hyper-parameters with the structure fixed.
pub fn run_monolithic_bo<O: Objective + ?Sized>(
    config: &TunerConfig,
    objective: &mut O,
    campaign_seed: u64,
) -> Result<TuningReport> {
    config.validate()?;
    let mut c = Campaign {
        objective,
        report: TuningReport::new(OptimizerKind::MonolithicBo, campaign_seed),
    };
    let stream = seed::derive(campaign_seed, OptimizerKind::MonolithicBo.stream_tag(), 0);
    let structural = config.baseline_structure;
    let params = SearchBounds::active_params(&structural);
    let space = config.bounds.space(&params)?;

    let initial: Vec<Vec<f64>> = Halton::new(space.len(), &mut seed::stream(stream, tag::REAL, 0))
        .take(config.mono_initial)
        .collect();
    for u in initial {
        let algorithm = space::apply(&params, &space.denormalize(&u), &config.prior);
        let result = c.evaluate(HyperParamPoint::new(structural, algorithm)?, Origin::InitialDesign)?;
        c.report.real_history.push(result);
    }
    for j in config.mono_initial..config.budget {
        let mut rng = seed::stream(stream, tag::REAL, j as u64 + 1);
        let (x, origin) = ei_proposal(
            &c.report.real_history,
            &params,
            &space,
            config,
            &mut c.report.model_fallbacks,
            &mut rng,
        );
        if origin == Origin::ExpectedImprovement {
            c.report.ei_proposals += 1;
        }
        let algorithm = space::apply(&params, &x, &config.prior);
        let result = c.evaluate(HyperParamPoint::new(structural, algorithm)?, origin)?;
        c.report.real_history.push(result);
    }
    Ok(c.report)
}

pub fn run<O: Objective + ?Sized>(
    kind: OptimizerKind,
    config: &TunerConfig,
    objective: &mut O,
    campaign_seed: u64,
) -> Result<TuningReport> {
    match kind {
        OptimizerKind::TwoTier => run_two_tier(config, objective, campaign_seed),
        OptimizerKind::RandomSearch => run_random_search(config, objective, campaign_seed),
        OptimizerKind::MonolithicBo => run_monolithic_bo(config, objective, campaign_seed),
    }
}
