//! Campaign configuration: a plain `key = value` file, one key per line, with
//! `#` comments. Unknown keys and malformed lines are errors that carry the
//! offending line number.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use twotier_core::rl::AgentOptions;
use twotier_core::space::SearchBounds;
use twotier_core::tuner::{OptimizerKind, TunerConfig};
use twotier_core::{Algorithm, AlgorithmParams, Policy, StructuralParams};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Confidence interval used in the summary tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interval {
    /// 1.96 standard errors.
    Normal,
    /// Student-t quantile with n - 1 degrees of freedom.
    StudentT,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub optimizers: Vec<OptimizerKind>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub episodes: usize,
    pub tuner: TunerConfig,
    pub agent: AgentOptions,
    pub out_dir: PathBuf,
    pub interval: Interval,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    /// Record real wall times. Off by default so output files are reproducible.
    pub record_wall_time: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            optimizers: OptimizerKind::ALL.to_vec(),
            repetitions: 10,
            base_seed: 0,
            episodes: 200,
            tuner: TunerConfig::default(),
            agent: AgentOptions::default(),
            out_dir: PathBuf::from("results"),
            interval: Interval::Normal,
            threads: 0,
            record_wall_time: false,
        }
    }
}

/// Every accepted key, in documentation order.
pub const KEYS: &[&str] = &[
    "optimizers",
    "budget",
    "n_structural",
    "n_real",
    "repetitions",
    "seed",
    "episodes",
    "out",
    "threads",
    "interval",
    "record_wall_time",
    "rs_fix_structural",
    "mono_initial",
    "n_init",
    "alpha_lower",
    "alpha_upper",
    "epsilon_lower",
    "epsilon_upper",
    "gamma_lower",
    "gamma_upper",
    "tau_lower",
    "tau_upper",
    "n_bins_lower",
    "n_bins_upper",
    "n_bins_angle_lower",
    "n_bins_angle_upper",
    "prior_alpha",
    "prior_epsilon",
    "prior_gamma",
    "prior_tau",
    "prior_lambda",
    "prior_epsilon_decay_rate",
    "prior_n_bins",
    "prior_n_bins_angle",
    "baseline_algorithm",
    "baseline_eligibility_traces",
    "baseline_policy",
    "baseline_epsilon_decay",
    "epsilon_floor",
    "explore_includes_greedy",
    "watkins_cutoff",
];

pub fn parse_optimizers(v: &str) -> Result<Vec<OptimizerKind>, String> {
    let mut out = Vec::new();
    for name in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind = OptimizerKind::from_name(name)
            .ok_or_else(|| format!("unknown optimizer `{name}` (expected two_tier, random, mono_bo)"))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err("optimizer list is empty".into());
    }
    Ok(out)
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("`{v}` is not a valid number"))
}

fn parse_unit(v: &str) -> Result<f64, String> {
    let x: f64 = parse_num(v)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{x} is outside [0, 1]"))
    }
}

fn parse_bins(v: &str) -> Result<f64, String> {
    let x: f64 = parse_num(v)?;
    if x.fract() == 0.0 && (5.0..=20.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{x} is not an integer in [5, 20]"))
    }
}

impl CampaignConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let t = &mut self.tuner;
        let prior = &mut t.prior;
        let b = &mut t.bounds;
        let base = &mut t.baseline_structure;
        match key {
            "optimizers" => self.optimizers = parse_optimizers(value)?,
            "budget" => t.budget = parse_num(value)?,
            "n_structural" => t.n_structural = parse_num(value)?,
            "n_real" => t.n_real = parse_num(value)?,
            "repetitions" => self.repetitions = parse_num(value)?,
            "seed" => self.base_seed = parse_num(value)?,
            "episodes" => self.episodes = parse_num(value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "threads" => self.threads = parse_num(value)?,
            "interval" => {
                self.interval = match value {
                    "normal" => Interval::Normal,
                    "t" | "student_t" => Interval::StudentT,
                    _ => return Err(format!("unknown interval `{value}` (expected normal or t)")),
                }
            }
            "record_wall_time" => self.record_wall_time = parse_bool(value)?,
            "rs_fix_structural" => t.rs_fix_structural = parse_bool(value)?,
            "mono_initial" => t.mono_initial = parse_num(value)?,
            "n_init" => t.bocs.n_init = parse_num(value)?,
            "alpha_lower" => b.alpha.0 = parse_unit(value)?,
            "alpha_upper" => b.alpha.1 = parse_unit(value)?,
            "epsilon_lower" => b.epsilon.0 = parse_unit(value)?,
            "epsilon_upper" => b.epsilon.1 = parse_unit(value)?,
            "gamma_lower" => b.gamma.0 = parse_unit(value)?,
            "gamma_upper" => b.gamma.1 = parse_unit(value)?,
            "tau_lower" => b.tau.0 = parse_num(value)?,
            "tau_upper" => b.tau.1 = parse_num(value)?,
            "n_bins_lower" => b.n_bins.0 = parse_bins(value)?,
            "n_bins_upper" => b.n_bins.1 = parse_bins(value)?,
            "n_bins_angle_lower" => b.n_bins_angle.0 = parse_bins(value)?,
            "n_bins_angle_upper" => b.n_bins_angle.1 = parse_bins(value)?,
            "prior_alpha" => prior.alpha = parse_unit(value)?,
            "prior_epsilon" => prior.epsilon = parse_unit(value)?,
            "prior_gamma" => prior.gamma = parse_unit(value)?,
            "prior_tau" => prior.tau = parse_num(value)?,
            "prior_lambda" => prior.lambda = parse_unit(value)?,
            "prior_epsilon_decay_rate" => prior.epsilon_decay_rate = parse_unit(value)?,
            "prior_n_bins" => prior.n_bins = parse_bins(value)? as u32,
            "prior_n_bins_angle" => prior.n_bins_angle = parse_bins(value)? as u32,
            "baseline_algorithm" => {
                base.algorithm = match value {
                    "q_learning" => Algorithm::QLearning,
                    "sarsa" => Algorithm::Sarsa,
                    _ => return Err(format!("unknown algorithm `{value}` (expected q_learning or sarsa)")),
                }
            }
            "baseline_eligibility_traces" => base.eligibility_traces = parse_bool(value)?,
            "baseline_policy" => {
                base.policy = match value {
                    "epsilon_greedy" => Policy::EpsilonGreedy,
                    "softmax" => Policy::Softmax,
                    _ => return Err(format!("unknown policy `{value}` (expected epsilon_greedy or softmax)")),
                }
            }
            "baseline_epsilon_decay" => base.epsilon_decay = parse_bool(value)?,
            "epsilon_floor" => self.agent.epsilon_floor = parse_unit(value)?,
            "explore_includes_greedy" => self.agent.explore_includes_greedy = parse_bool(value)?,
            "watkins_cutoff" => self.agent.watkins_cutoff = parse_bool(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Parses configuration text on top of the defaults.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut lines: HashMap<String, usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Line {
                    line,
                    message: format!("expected `key = value`, found `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if let Some(prev) = lines.insert(key.to_string(), line) {
                return Err(ConfigError::Line {
                    line,
                    message: format!("`{key}` already set on line {prev}"),
                });
            }
            cfg.set(key, value)
                .map_err(|message| ConfigError::Line { line, message: format!("{key}: {message}") })?;
        }
        cfg.validate_with(&lines)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_with(&HashMap::new())
    }

    fn validate_with(&self, lines: &HashMap<String, usize>) -> Result<(), ConfigError> {
        let fail = |key: &str, message: String| match lines.get(key) {
            Some(&line) => ConfigError::Line { line, message },
            None => ConfigError::Invalid(message),
        };
        let b = &self.tuner.bounds;
        let pairs = [
            ("alpha", b.alpha),
            ("epsilon", b.epsilon),
            ("gamma", b.gamma),
            ("tau", b.tau),
            ("n_bins", b.n_bins),
            ("n_bins_angle", b.n_bins_angle),
        ];
        for (name, (lo, hi)) in pairs {
            if lo >= hi {
                let upper = format!("{name}_upper");
                let key = if lines.contains_key(&upper) { upper } else { format!("{name}_lower") };
                return Err(fail(&key, format!("{name}: lower {lo} >= upper {hi}")));
            }
        }
        if b.tau.0 <= 0.0 {
            return Err(fail("tau_lower", "tau_lower must be positive".into()));
        }
        if b.gamma.1 >= 1.0 {
            return Err(fail("gamma_upper", "gamma_upper must be below 1".into()));
        }
        if self.repetitions == 0 {
            return Err(fail("repetitions", "repetitions must be at least 1".into()));
        }
        if self.episodes == 0 {
            return Err(fail("episodes", "episodes must be at least 1".into()));
        }
        let t = &self.tuner;
        if t.n_structural + t.n_real != t.budget {
            let key = ["n_real", "n_structural", "budget"]
                .into_iter()
                .filter_map(|k| lines.get(k).map(|l| (k, *l)))
                .max_by_key(|(_, l)| *l)
                .map_or("budget", |(k, _)| k);
            return Err(fail(
                key,
                format!(
                    "n_structural ({}) + n_real ({}) must equal budget ({})",
                    t.n_structural, t.n_real, t.budget
                ),
            ));
        }
        t.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if t.prior.validate().is_err() || self.agent.epsilon_floor > 1.0 {
            return Err(ConfigError::Invalid("prior hyper-parameters out of range".into()));
        }
        Ok(())
    }
}

/// Accessors so callers outside this module need not reach into the tuner.
impl CampaignConfig {
    pub fn bounds(&self) -> &SearchBounds {
        &self.tuner.bounds
    }

    pub fn prior(&self) -> &AlgorithmParams {
        &self.tuner.prior
    }

    pub fn baseline_structure(&self) -> &StructuralParams {
        &self.tuner.baseline_structure
    }
}
