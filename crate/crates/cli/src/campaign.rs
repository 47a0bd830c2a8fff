//! Runs every (optimizer, repetition) pair of a campaign, in parallel, and
//! collects the reports in a fixed order so the output files do not depend
//! on scheduling.

use std::fs::{self, File};
use std::io::BufWriter;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use twotier_core::tuner::{self, CartPoleObjective, Clock, NoClock, OptimizerKind, TuningReport};

use crate::config::CampaignConfig;
use crate::results::{self, ResultRow};

/// Seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Job {
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

/// Jobs in output order: optimizers as configured, then seeds ascending.
pub fn jobs(cfg: &CampaignConfig) -> Vec<Job> {
    cfg.optimizers
        .iter()
        .flat_map(|&optimizer| {
            (0..cfg.repetitions as u64).map(move |rep| Job {
                optimizer,
                seed: cfg.base_seed.wrapping_add(rep),
            })
        })
        .collect()
}

fn run_job(cfg: &CampaignConfig, job: Job) -> Result<TuningReport> {
    let report = if cfg.record_wall_time {
        let mut objective = CartPoleObjective {
            episodes: cfg.episodes,
            options: cfg.agent,
            clock: WallClock::start(),
        };
        tuner::run(job.optimizer, &cfg.tuner, &mut objective, job.seed)
    } else {
        let mut objective = CartPoleObjective {
            episodes: cfg.episodes,
            options: cfg.agent,
            clock: NoClock,
        };
        tuner::run(job.optimizer, &cfg.tuner, &mut objective, job.seed)
    };
    report.with_context(|| format!("{} campaign with seed {} failed", job.optimizer, job.seed))
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Outcome of a whole campaign. Failed jobs are reported but do not stop
/// the others.
#[derive(Debug)]
pub struct CampaignOutcome {
    pub reports: Vec<TuningReport>,
    pub failures: Vec<(Job, String)>,
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignOutcome> {
    let jobs = jobs(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .context("cannot build the worker pool")?;
    let outcomes: Vec<(Job, Result<TuningReport>)> = pool.install(|| {
        jobs.par_iter()
            .map(|&job| {
                let r = panic::catch_unwind(AssertUnwindSafe(|| run_job(cfg, job)))
                    .unwrap_or_else(|p| Err(anyhow::anyhow!("panicked: {}", panic_message(p.as_ref()))));
                if let Ok(rep) = &r {
                    log::info!(
                        "{} seed {}: best f = {}",
                        job.optimizer,
                        job.seed,
                        rep.best().map_or(f64::NAN, |b| b.f_value)
                    );
                }
                (job, r)
            })
            .collect()
    });
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (job, r) in outcomes {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                log::error!("{e:#}");
                failures.push((job, format!("{e:#}")));
            }
        }
    }
    Ok(CampaignOutcome { reports, failures })
}

pub fn rows(reports: &[TuningReport]) -> Vec<ResultRow> {
    reports.iter().flat_map(results::rows_from_report).collect()
}

/// Paths of the files written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub best: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            results: dir.join("results.csv"),
            summary: dir.join("summary.csv"),
            best: dir.join("best.txt"),
        }
    }
}

pub fn write_outputs(cfg: &CampaignConfig, rows: &[ResultRow]) -> Result<OutputPaths> {
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let paths = OutputPaths::in_dir(dir);
    let f = File::create(&paths.results).with_context(|| format!("cannot create {}", paths.results.display()))?;
    results::write_rows(BufWriter::new(f), rows)?;
    let summary = results::summarize(rows, cfg.interval);
    let f = File::create(&paths.summary).with_context(|| format!("cannot create {}", paths.summary.display()))?;
    results::write_summary(BufWriter::new(f), &summary)?;
    fs::write(&paths.best, results::best_text(rows))
        .with_context(|| format!("cannot write {}", paths.best.display()))?;
    Ok(paths)
}
