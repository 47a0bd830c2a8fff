//! Acceptance checks. Each check prints one PASS/FAIL line; the test fails
//! if any check fails. Run with `--nocapture` to see the report.

use std::fs;
use std::process::Command;

use rand::Rng;
use rand_distr::StandardNormal;
use twotier::campaign::{self, run_campaign};
use twotier::config::CampaignConfig;
use twotier_core::bocs::{n_features, quadratic_value, sa_maximize, AnnealSchedule};
use twotier_core::cartpole::{Action, CartPole, EnvState, Physics, FAIL_REWARD, MAX_STEPS, SURVIVE_REWARD};
use twotier_core::gp::{expected_improvement, GpConfig, GpModel, LengthScales, NoiseVariance};
use twotier_core::rl::{td_update, Agent, AgentOptions, EnvStep, Environment, QTable, TraceTable, Transition};
use twotier_core::seed::rng_from;
use twotier_core::tuner::{OptimizerKind, TuningReport};
use twotier_core::{Algorithm, AlgorithmParams, StructuralParams};

struct Report {
    failed: Vec<&'static str>,
}

impl Report {
    fn check(&mut self, name: &'static str, ok: bool, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(name);
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn final_incumbents(reports: &[TuningReport], kind: OptimizerKind) -> Vec<f64> {
    reports
        .iter()
        .filter(|r| r.optimizer == kind)
        .map(|r| *r.incumbent_trace().last().unwrap())
        .collect()
}

fn campaign_checks(rep: &mut Report) {
    let cfg = CampaignConfig {
        repetitions: 10,
        episodes: 200,
        ..CampaignConfig::default()
    };
    let outcome = run_campaign(&cfg).unwrap();
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    let reports = &outcome.reports;

    let two = mean(&final_incumbents(reports, OptimizerKind::TwoTier));
    let rs = mean(&final_incumbents(reports, OptimizerKind::RandomSearch));
    let mono = mean(&final_incumbents(reports, OptimizerKind::MonolithicBo));
    rep.check(
        "two-tier final incumbent vs baselines",
        two >= rs.max(mono) - 5.0,
        format!("two_tier {two:.2}, random {rs:.2}, mono_bo {mono:.2} (10 seeds, 200 episodes)"),
    );

    let budget_ok = reports.iter().all(|r| {
        r.evaluations.len() == 30
            && (r.optimizer != OptimizerKind::TwoTier || (r.structural_proposals == 10 && r.ei_proposals == 20))
    });
    rep.check(
        "budget accounting",
        budget_ok,
        format!("{} campaigns, 30 evaluations each, two-tier split 10 + 20", reports.len()),
    );

    let rows = campaign::rows(reports);
    let mut monotone = true;
    let mut best = f64::NEG_INFINITY;
    for (i, r) in rows.iter().enumerate() {
        if r.eval_index == 0 {
            best = f64::NEG_INFINITY;
        } else if r.incumbent < rows[i - 1].incumbent {
            monotone = false;
        }
        best = best.max(r.f_value);
        monotone &= r.incumbent == best;
    }
    rep.check(
        "incumbent monotonicity",
        monotone,
        format!("{} rows, incumbent equals the running maximum of f", rows.len()),
    );
}

fn sa_hits(d: usize) -> usize {
    (0..100u64)
        .filter(|&seed| {
            let mut crng = rng_from(50_000 + seed);
            let coeffs: Vec<f64> = (0..n_features(d)).map(|_| crng.sample::<f64, _>(StandardNormal)).collect();
            let x = sa_maximize(&coeffs, d, &AnnealSchedule::default(), &mut rng_from(seed));
            let exhaustive = (0..1u32 << d)
                .map(|i| {
                    let v: Vec<bool> = (0..d).map(|b| i >> b & 1 == 1).collect();
                    quadratic_value(&coeffs, &v)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            (quadratic_value(&coeffs, &x) - exhaustive).abs() < 1e-12
        })
        .count()
}

fn sa_check(rep: &mut Report) {
    let (h4, h10) = (sa_hits(4), sa_hits(10));
    rep.check(
        "annealing vs exhaustive search",
        h4 == 100 && h10 >= 95,
        format!("d=4 {h4}/100, d=10 {h10}/100"),
    );
}

fn fixed(ls: f64, noise: f64) -> GpConfig {
    GpConfig {
        length_scales: LengthScales::Shared(ls),
        noise: NoiseVariance::Fixed(noise),
        signal_variance: 1.0,
    }
}

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn gp_checks(rep: &mut Report) {
    let mut rng = rng_from(99);
    let pts = |rng: &mut twotier_core::seed::Rng, n: usize| -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..2).map(|_| rng.random::<f64>()).collect()).collect()
    };

    let xs = pts(&mut rng, 12);
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x[0] - x[1] * x[1]).collect();
    let m = GpModel::fit(&xs, &ys, &fixed(0.2, 1e-8)).unwrap();
    let interp = xs.iter().zip(&ys).map(|(x, y)| (m.posterior(x).0 - y).abs()).fold(0.0, f64::max);

    let ei_zero = expected_improvement(-1.0, 0.0, 0.0) == 0.0 && expected_improvement(0.0, 0.0, 0.0) == 0.0;
    let ei_ref = expected_improvement(3.0, 1.0, 3.0);

    let (ls, noise) = (0.3, 1e-4);
    let ys2: Vec<f64> = xs.iter().map(|x| (5.0 * x[0]).sin() + x[1]).collect();
    let m2 = GpModel::fit(&xs, &ys2, &fixed(ls, noise)).unwrap();
    let n = ys2.len() as f64;
    let mu0 = ys2.iter().sum::<f64>() / n;
    let sd = (ys2.iter().map(|y| (y - mu0).powi(2)).sum::<f64>() / n).sqrt();
    let k = |a: &[f64], b: &[f64]| (-0.5 * a.iter().zip(b).map(|(p, q)| ((p - q) / ls).powi(2)).sum::<f64>()).exp();
    let gram: Vec<Vec<f64>> = (0..xs.len())
        .map(|i| (0..xs.len()).map(|j| k(&xs[i], &xs[j]) + if i == j { noise } else { 0.0 }).collect())
        .collect();
    let w = dense_solve(gram, ys2.iter().map(|y| (y - mu0) / sd).collect());
    let dense_err = pts(&mut rng, 10)
        .iter()
        .map(|x| {
            let oracle = mu0 + sd * xs.iter().zip(&w).map(|(a, wi)| k(a, x) * wi).sum::<f64>();
            (m2.posterior(x).0 - oracle).abs()
        })
        .fold(0.0, f64::max);

    rep.check(
        "gaussian process analytic cases",
        interp < 1e-3 && ei_zero && (ei_ref - 0.3989423).abs() < 1e-6 && dense_err < 1e-8,
        format!("interpolation error {interp:.2e}, EI(sigma=0) zero {ei_zero}, EI ref {ei_ref:.7}, dense-solve error {dense_err:.2e}"),
    );
}

/// Deterministic five-state chain; exits pay 0.5 (left end) and 1 (right end).
struct Chain {
    s: usize,
    steps: u32,
}

impl Environment for Chain {
    fn n_states(&self) -> usize {
        5
    }
    fn n_actions(&self) -> usize {
        2
    }
    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        self.s = rng.random_range(0..5);
        self.steps = 0;
        self.s
    }
    fn step(&mut self, action: usize) -> EnvStep {
        self.steps += 1;
        let (next, reward, terminal) = match (self.s, action) {
            (0, 0) => (0, 0.5, true),
            (4, 1) => (4, 1.0, true),
            (s, 0) => (s - 1, 0.0, false),
            (s, _) => (s + 1, 0.0, false),
        };
        self.s = next;
        EnvStep { state: next, reward, terminal, truncated: !terminal && self.steps >= 100 }
    }
}

fn rl_checks(rep: &mut Report) {
    // With gamma = 0.8 the left exit wins only in state 0 (0.8^4 < 0.5).
    let optimal = vec![0, 1, 1, 1, 1];
    let params = AlgorithmParams { alpha: 0.1, epsilon: 0.2, gamma: 0.8, ..AlgorithmParams::default() };
    let solved = (0..10u64)
        .filter(|&seed| {
            let mut agent = Agent::new(StructuralParams::default(), params, AgentOptions::default(), 5, 2).unwrap();
            let mut env = Chain { s: 0, steps: 0 };
            let mut rng = rng_from(seed);
            for _ in 0..2000 {
                agent.run_episode(&mut env, &mut rng);
            }
            agent.greedy_policy() == optimal
        })
        .count();

    let mut rng = rng_from(5);
    let mut identical = true;
    for sarsa in [false, true] {
        let plain_st = StructuralParams {
            algorithm: if sarsa { Algorithm::Sarsa } else { Algorithm::QLearning },
            ..StructuralParams::default()
        };
        let traced_st = StructuralParams { eligibility_traces: true, ..plain_st };
        let p = AlgorithmParams { lambda: 0.0, ..AlgorithmParams::default() };
        let mut plain = QTable::new(4, 2);
        for s in 0..4 {
            for a in 0..2 {
                plain.set(s, a, rng.random_range(-5.0..5.0));
            }
        }
        let mut traced = plain.clone();
        let mut e = TraceTable::new(4, 2);
        for _ in 0..500 {
            let end = rng.random::<f64>() < 0.1;
            let t = Transition {
                state: rng.random_range(0..4),
                action: rng.random_range(0..2),
                reward: rng.random_range(-1.0..1.0),
                next: (!end).then(|| (rng.random_range(0..4), rng.random_range(0..2))),
            };
            td_update(&mut plain, None, &t, &plain_st, &p, &AgentOptions::default());
            td_update(&mut traced, Some(&mut e), &t, &traced_st, &p, &AgentOptions::default());
        }
        identical &= plain.values().iter().zip(traced.values()).all(|(a, b)| a.to_bits() == b.to_bits());
    }
    rep.check(
        "tabular learning",
        solved == 10 && identical,
        format!("chain optimum recovered on {solved}/10 seeds, lambda=0 traced update identical: {identical}"),
    );
}

fn physics_check(rep: &mut Report) {
    let next = Physics::default().advance(&EnvState::default(), Action::Right);
    let expected = [0.0, 0.1951219512195122, 0.0, -0.2926829268292683];
    let err = next.as_array().iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    // constant push fails: +1 per surviving step, -200 on the failing one
    let mut env = CartPole::default();
    env.reset_to(EnvState::default());
    let mut total = 0.0;
    let mut steps = 0u32;
    let schedule_ok = loop {
        let out = env.step(Action::Right);
        steps += 1;
        total += out.reward;
        if out.terminal {
            break out.reward == FAIL_REWARD && total == (steps - 1) as f64 * SURVIVE_REWARD + FAIL_REWARD;
        }
        if out.reward != SURVIVE_REWARD || steps >= MAX_STEPS {
            break false;
        }
    };
    rep.check(
        "cart-pole physics and rewards",
        err < 1e-10 && schedule_ok,
        format!("one-step error {err:.1e}, reward schedule exact: {schedule_ok} (failed at step {steps}, total {total})"),
    );
}

fn determinism_check(rep: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.cfg");
    fs::write(&config, "episodes = 40\nrepetitions = 3\n").unwrap();
    let run = |name: &str, threads: &str| -> Vec<u8> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_twotier"))
            .args(["run", "--config"])
            .arg(&config)
            .args(["--seed", "11", "--threads", threads, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        fs::read(out.join("results.csv")).unwrap()
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "4");
    rep.check(
        "byte-identical results",
        a == b && a == c,
        format!("{} bytes; repeat run equal {}, 1 vs 4 threads equal {}", a.len(), a == b, a == c),
    );
}

#[test]
fn acceptance() {
    let mut rep = Report { failed: Vec::new() };
    campaign_checks(&mut rep);
    sa_check(&mut rep);
    gp_checks(&mut rep);
    rl_checks(&mut rep);
    physics_check(&mut rep);
    determinism_check(&mut rep);
    assert!(rep.failed.is_empty(), "failed: {:?}", rep.failed);
}
