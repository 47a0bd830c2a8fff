//! Output files: per-evaluation rows, per-index summaries and the best points.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use twotier_core::tuner::TuningReport;
use twotier_core::{Algorithm, Policy};

use crate::config::Interval;

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub optimizer: String,
    pub seed: u64,
    pub eval_index: usize,
    /// 0 = Q-learning, 1 = SARSA.
    pub algorithm: u8,
    pub eligibility_traces: u8,
    /// 0 = epsilon-greedy, 1 = softmax.
    pub policy: u8,
    pub epsilon_decay: u8,
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub tau: f64,
    pub lambda: f64,
    pub epsilon_decay_rate: f64,
    pub n_bins: u32,
    pub n_bins_angle: u32,
    pub f_value: f64,
    pub incumbent: f64,
    pub wall_time: f64,
}

pub fn rows_from_report(report: &TuningReport) -> Vec<ResultRow> {
    let trace = report.incumbent_trace();
    report
        .evaluations
        .iter()
        .zip(trace)
        .map(|(e, incumbent)| {
            let s = &e.result.point.structural;
            let a = &e.result.point.algorithm;
            ResultRow {
                optimizer: report.optimizer.name().to_string(),
                seed: report.campaign_seed,
                eval_index: e.index,
                algorithm: u8::from(s.algorithm == Algorithm::Sarsa),
                eligibility_traces: u8::from(s.eligibility_traces),
                policy: u8::from(s.policy == Policy::Softmax),
                epsilon_decay: u8::from(s.epsilon_decay),
                alpha: a.alpha,
                epsilon: a.epsilon,
                gamma: a.gamma,
                tau: a.tau,
                lambda: a.lambda,
                epsilon_decay_rate: a.epsilon_decay_rate,
                n_bins: a.n_bins,
                n_bins_angle: a.n_bins_angle,
                f_value: e.result.f_value,
                incumbent,
                wall_time: e.result.wall_time,
            }
        })
        .collect()
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> csv::Result<Vec<ResultRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// One row of `summary.csv`: statistics across seeds at a fixed evaluation index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub optimizer: String,
    pub eval_index: usize,
    pub n: usize,
    pub incumbent_mean: f64,
    pub incumbent_half_width: f64,
    pub cumulative_mean: f64,
    pub cumulative_half_width: f64,
}

/// Sample mean and half-width of the confidence interval (0 for a single value).
pub fn mean_half_width(xs: &[f64], interval: Interval) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let z = match interval {
        Interval::Normal => 1.96,
        Interval::StudentT => StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("degrees of freedom are positive")
            .inverse_cdf(0.975),
    };
    (mean, z * var.sqrt() / (n as f64).sqrt())
}

/// Groups rows by optimizer (first-appearance order) and evaluation index.
/// The cumulative column is the running sum of f within each seed's campaign.
pub fn summarize(rows: &[ResultRow], interval: Interval) -> Vec<SummaryRow> {
    let mut optimizers: Vec<&str> = Vec::new();
    for r in rows {
        if !optimizers.contains(&r.optimizer.as_str()) {
            optimizers.push(&r.optimizer);
        }
    }
    let mut out = Vec::new();
    for opt in optimizers {
        let mut seeds: Vec<u64> = Vec::new();
        for r in rows.iter().filter(|r| r.optimizer == opt) {
            if !seeds.contains(&r.seed) {
                seeds.push(r.seed);
            }
        }
        // (eval_index -> incumbents, cumulative sums) across seeds
        let mut by_index: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for seed in seeds {
            let mut campaign: Vec<&ResultRow> =
                rows.iter().filter(|r| r.optimizer == opt && r.seed == seed).collect();
            campaign.sort_by_key(|r| r.eval_index);
            let mut cumulative = 0.0;
            for r in campaign {
                cumulative += r.f_value;
                if by_index.len() <= r.eval_index {
                    by_index.resize_with(r.eval_index + 1, Default::default);
                }
                by_index[r.eval_index].0.push(r.incumbent);
                by_index[r.eval_index].1.push(cumulative);
            }
        }
        for (eval_index, (inc, cum)) in by_index.into_iter().enumerate() {
            if inc.is_empty() {
                continue;
            }
            let (incumbent_mean, incumbent_half_width) = mean_half_width(&inc, interval);
            let (cumulative_mean, cumulative_half_width) = mean_half_width(&cum, interval);
            out.push(SummaryRow {
                optimizer: opt.to_string(),
                eval_index,
                n: inc.len(),
                incumbent_mean,
                incumbent_half_width,
                cumulative_mean,
                cumulative_half_width,
            });
        }
    }
    out
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary<R: Read>(input: R) -> csv::Result<Vec<SummaryRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

fn describe(r: &ResultRow) -> String {
    let algorithm = if r.algorithm == 1 { "sarsa" } else { "q_learning" };
    let policy = if r.policy == 1 { "softmax" } else { "epsilon_greedy" };
    format!(
        "{algorithm} traces={} {policy} decay={} alpha={} epsilon={} gamma={} tau={} lambda={} \
         decay_rate={} n_bins={} n_bins_angle={}",
        r.eligibility_traces == 1,
        r.epsilon_decay == 1,
        r.alpha,
        r.epsilon,
        r.gamma,
        r.tau,
        r.lambda,
        r.epsilon_decay_rate,
        r.n_bins,
        r.n_bins_angle
    )
}

/// Earliest row with the highest f; `None` when empty.
fn best_row<'a>(rows: impl Iterator<Item = &'a ResultRow>) -> Option<&'a ResultRow> {
    rows.fold(None, |best: Option<&ResultRow>, r| match best {
        Some(b) if b.f_value >= r.f_value => Some(b),
        _ => Some(r),
    })
}

/// Human-readable best configuration per optimizer, overall and per seed.
pub fn best_text(rows: &[ResultRow]) -> String {
    let mut optimizers: Vec<&str> = Vec::new();
    for r in rows {
        if !optimizers.contains(&r.optimizer.as_str()) {
            optimizers.push(&r.optimizer);
        }
    }
    let mut s = String::new();
    for opt in optimizers {
        let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.optimizer == opt).collect();
        let Some(best) = best_row(mine.iter().copied()) else { continue };
        let _ = writeln!(s, "[{opt}]");
        let _ = writeln!(
            s,
            "best f={} (seed {}, evaluation {}): {}",
            best.f_value,
            best.seed,
            best.eval_index,
            describe(best)
        );
        let mut seeds: Vec<u64> = Vec::new();
        for r in &mine {
            if !seeds.contains(&r.seed) {
                seeds.push(r.seed);
            }
        }
        for seed in seeds {
            if let Some(b) = best_row(mine.iter().copied().filter(|r| r.seed == seed)) {
                let _ = writeln!(s, "  seed {seed}: f={} at evaluation {}: {}", b.f_value, b.eval_index, describe(b));
            }
        }
        s.push('\n');
    }
    s
}
