use twotier_core::rl::AgentOptions;
use twotier_core::tuner::{
    evaluate_f, run, run_monolithic_bo, run_random_search, run_two_tier, FnObjective, MetaEpisodeResult, NoClock,
    Objective, OptimizerKind, Origin, TunerConfig,
};
use twotier_core::{Algorithm, AlgorithmParams, HyperParamPoint, Policy, Result, StructuralParams};

/// Counts calls and forwards to a synthetic score.
struct Counting<F> {
    calls: usize,
    seeds: Vec<u64>,
    f: F,
}

impl<F: FnMut(&HyperParamPoint, u64) -> f64> Objective for Counting<F> {
    fn evaluate(&mut self, point: &HyperParamPoint, seed: u64) -> Result<MetaEpisodeResult> {
        self.calls += 1;
        self.seeds.push(seed);
        let f = (self.f)(point, seed);
        Ok(MetaEpisodeResult::from_rewards(*point, vec![f], seed, 0.0))
    }
}

/// Structure-dependent synthetic objective with seed noise.
fn synthetic(p: &HyperParamPoint, seed: u64) -> f64 {
    let s = &p.structural;
    let a = &p.algorithm;
    let structure = match (s.algorithm, s.eligibility_traces, s.policy) {
        (Algorithm::Sarsa, true, Policy::Softmax) => 3.0,
        (_, true, _) => 1.0,
        _ => 0.0,
    };
    let noise = (seed % 1000) as f64 / 1000.0 * 0.1;
    structure - (a.alpha - 0.3).powi(2) - (a.gamma - 0.9).powi(2) + noise
}

fn counting() -> Counting<fn(&HyperParamPoint, u64) -> f64> {
    Counting { calls: 0, seeds: Vec::new(), f: synthetic }
}

#[test]
fn every_optimizer_spends_exactly_the_budget() {
    let cfg = TunerConfig::default();
    for kind in OptimizerKind::ALL {
        for seed in 0..3 {
            let mut obj = counting();
            let r = run(kind, &cfg, &mut obj, seed).unwrap();
            assert_eq!(obj.calls, 30, "{kind}");
            assert_eq!(r.evaluations.len(), 30);
            assert_eq!(r.model_fallbacks, 0);
            let mut seeds = obj.seeds.clone();
            seeds.sort_unstable();
            seeds.dedup();
            assert_eq!(seeds.len(), 30, "evaluation seeds must be distinct");
            match kind {
                OptimizerKind::TwoTier => {
                    assert_eq!(r.structural_proposals, 10);
                    assert_eq!(r.ei_proposals, 20);
                }
                OptimizerKind::MonolithicBo => {
                    let initial = r.evaluations.iter().filter(|e| e.origin == Origin::InitialDesign).count();
                    assert_eq!(initial, 5);
                    assert_eq!(r.ei_proposals, 25);
                }
                OptimizerKind::RandomSearch => {
                    assert!(r.evaluations.iter().all(|e| e.origin == Origin::Random));
                }
            }
        }
    }
}

#[test]
fn incumbent_trace_never_decreases() {
    let cfg = TunerConfig::default();
    for kind in OptimizerKind::ALL {
        for seed in 0..5 {
            let r = run(kind, &cfg, &mut counting(), seed).unwrap();
            let trace = r.incumbent_trace();
            assert!(trace.windows(2).all(|w| w[1] >= w[0]), "{kind} seed {seed}");
            assert_eq!(*trace.last().unwrap(), r.best().unwrap().f_value);
        }
    }
}

#[test]
fn two_tier_freezes_the_best_structure() {
    let cfg = TunerConfig::default();
    for seed in 0..5 {
        let r = run_two_tier(&cfg, &mut counting(), seed).unwrap();
        let d1 = r.structural_history.entries();
        assert_eq!(d1.len(), 10);
        assert_eq!(r.real_history.len(), 21);
        for (e, d) in r.evaluations.iter().zip(d1) {
            assert_eq!(&e.result, d);
            assert_eq!(e.origin, Origin::Structural);
            assert_eq!(d.point.algorithm, cfg.prior);
        }
        let best = r.structural_history.best().unwrap();
        assert_eq!(&r.real_history.entries()[0], best);
        for e in &r.evaluations[10..] {
            assert_eq!(e.result.point.structural, best.point.structural);
        }
    }
}

#[test]
fn two_tier_prefers_the_rewarding_structure() {
    let cfg = TunerConfig::default();
    let target = StructuralParams {
        algorithm: Algorithm::Sarsa,
        eligibility_traces: true,
        policy: Policy::Softmax,
        epsilon_decay: false,
    };
    let found = (0..10)
        .filter(|&seed| {
            let r = run_two_tier(&cfg, &mut counting(), seed).unwrap();
            let s = r.best().unwrap().point.structural;
            (s.algorithm, s.eligibility_traces, s.policy) == (target.algorithm, target.eligibility_traces, target.policy)
        })
        .count();
    assert!(found >= 8, "{found}/10");
}

#[test]
fn campaigns_are_deterministic() {
    let cfg = TunerConfig::default();
    for kind in OptimizerKind::ALL {
        let a = run(kind, &cfg, &mut counting(), 42).unwrap();
        let b = run(kind, &cfg, &mut counting(), 42).unwrap();
        assert_eq!(a, b, "{kind}");
        let c = run(kind, &cfg, &mut counting(), 43).unwrap();
        assert_ne!(a, c, "{kind}");
    }
}

#[test]
fn optimizers_share_evaluation_seeds() {
    let cfg = TunerConfig::default();
    let mut seeds = Vec::new();
    for kind in OptimizerKind::ALL {
        let mut obj = counting();
        run(kind, &cfg, &mut obj, 9).unwrap();
        seeds.push(obj.seeds);
    }
    assert_eq!(seeds[0], seeds[1]);
    assert_eq!(seeds[1], seeds[2]);
}

#[test]
fn random_search_structure_bits_are_uniform() {
    let n = 10_000;
    let cfg = TunerConfig {
        budget: n,
        n_structural: n / 2,
        n_real: n / 2,
        ..TunerConfig::default()
    };
    let r = run_random_search(&cfg, &mut FnObjective(|_: &HyperParamPoint, _| 0.0), 3).unwrap();
    let sarsa = r
        .evaluations
        .iter()
        .filter(|e| e.result.point.structural.algorithm == Algorithm::Sarsa)
        .count() as f64;
    let sigma = (n as f64 * 0.25).sqrt();
    assert!((sarsa - n as f64 / 2.0).abs() < 3.0 * sigma, "{sarsa}");
    let bounds = cfg.bounds;
    for e in &r.evaluations {
        let a = &e.result.point.algorithm;
        assert!(a.alpha >= bounds.alpha.0 && a.alpha < bounds.alpha.1);
        assert!((5..=20).contains(&a.n_bins) && (5..=20).contains(&a.n_bins_angle));
    }
}

#[test]
fn monolithic_bo_finds_synthetic_optimum() {
    let cfg = TunerConfig::default();
    let f = |p: &HyperParamPoint, _| -((p.algorithm.alpha - 0.3).powi(2) + (p.algorithm.epsilon - 0.6).powi(2));
    // Grid-search oracle over the box for the optimum location.
    let steps = 999;
    let (mut best, mut arg) = (f64::NEG_INFINITY, (0.0, 0.0));
    for i in 0..=steps {
        for j in 0..=steps {
            let alpha = cfg.bounds.alpha.0 + (cfg.bounds.alpha.1 - cfg.bounds.alpha.0) * i as f64 / steps as f64;
            let epsilon = cfg.bounds.epsilon.0 + (cfg.bounds.epsilon.1 - cfg.bounds.epsilon.0) * j as f64 / steps as f64;
            let v = -((alpha - 0.3f64).powi(2) + (epsilon - 0.6f64).powi(2));
            if v > best {
                best = v;
                arg = (alpha, epsilon);
            }
        }
    }
    let close = (0..10)
        .filter(|&seed| {
            let r = run_monolithic_bo(&cfg, &mut FnObjective(f), seed).unwrap();
            assert!(r
                .evaluations
                .iter()
                .all(|e| e.result.point.structural == cfg.baseline_structure));
            let p = r.best().unwrap().point.algorithm;
            ((p.alpha - arg.0).powi(2) + (p.epsilon - arg.1).powi(2)).sqrt() < 0.1
        })
        .count();
    assert!(close >= 8, "{close}/10");
}

fn hand_tuned() -> HyperParamPoint {
    HyperParamPoint::new(
        StructuralParams::default(),
        AlgorithmParams {
            alpha: 0.3,
            epsilon: 0.1,
            gamma: 0.99,
            n_bins: 8,
            n_bins_angle: 8,
            ..AlgorithmParams::default()
        },
    )
    .unwrap()
}

#[test]
fn meta_episode_is_reproducible_and_averaged() {
    let p = hand_tuned();
    let a = evaluate_f(&p, 50, 17, &AgentOptions::default(), &NoClock).unwrap();
    let b = evaluate_f(&p, 50, 17, &AgentOptions::default(), &NoClock).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.episode_rewards.len(), 50);
    let mean = a.episode_rewards.iter().sum::<f64>() / 50.0;
    assert!((a.f_value - mean).abs() < 1e-9);
    assert!(a.episode_rewards.iter().all(|r| *r == 200.0 || *r <= -1.0));
    assert!(evaluate_f(&p, 0, 17, &AgentOptions::default(), &NoClock).is_err());
}

#[test]
fn reckless_settings_score_below_hand_tuned() {
    let good = hand_tuned();
    let bad = HyperParamPoint::new(
        StructuralParams::default(),
        AlgorithmParams {
            alpha: 0.99,
            epsilon: 0.99,
            ..good.algorithm
        },
    )
    .unwrap();
    let mean = |p: &HyperParamPoint| {
        (0..10)
            .map(|s| evaluate_f(p, 200, s, &AgentOptions::default(), &NoClock).unwrap().f_value)
            .sum::<f64>()
            / 10.0
    };
    let (g, b) = (mean(&good), mean(&bad));
    assert!(b < g, "reckless {b} vs hand-tuned {g}");
}
