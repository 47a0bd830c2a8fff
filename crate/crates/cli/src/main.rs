use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use twotier::campaign::{self, run_campaign, write_outputs};
use twotier::config::{parse_optimizers, CampaignConfig, Interval};
use twotier::results;

#[derive(Parser)]
#[command(name = "twotier", version, about = "Two-tier hyper-parameter tuning for tabular RL on cart-pole")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run tuning campaigns and write results.csv, summary.csv and best.txt.
    Run {
        /// Configuration file (`key = value` lines).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated list of two_tier, random, mono_bo.
        #[arg(long)]
        optimizers: Option<String>,
        /// Base campaign seed; repetition r uses seed + r.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep the structure fixed in random search.
        #[arg(long)]
        rs_fix_structural: bool,
        /// Worker threads (0 = one per core).
        #[arg(long)]
        threads: Option<usize>,
        /// Record real wall times (makes results.csv differ between runs).
        #[arg(long)]
        wall_time: bool,
        /// Use Student-t confidence intervals in summary.csv.
        #[arg(long)]
        t_interval: bool,
    },
    /// Recompute summary.csv from an existing results.csv.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        t_interval: bool,
    },
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Run {
            config,
            optimizers,
            seed,
            reps,
            out,
            rs_fix_structural,
            threads,
            wall_time,
            t_interval,
        } => {
            let mut cfg = match &config {
                Some(path) => CampaignConfig::from_file(path)?,
                None => CampaignConfig::default(),
            };
            if let Some(v) = optimizers {
                cfg.optimizers = parse_optimizers(&v).map_err(anyhow::Error::msg)?;
            }
            if let Some(v) = seed {
                cfg.base_seed = v;
            }
            if let Some(v) = reps {
                cfg.repetitions = v;
            }
            if let Some(v) = out {
                cfg.out_dir = v;
            }
            if let Some(v) = threads {
                cfg.threads = v;
            }
            cfg.tuner.rs_fix_structural |= rs_fix_structural;
            cfg.record_wall_time |= wall_time;
            if t_interval {
                cfg.interval = Interval::StudentT;
            }
            cfg.validate()?;

            let outcome = run_campaign(&cfg)?;
            let rows = campaign::rows(&outcome.reports);
            let paths = write_outputs(&cfg, &rows)?;
            println!("wrote {} rows to {}", rows.len(), paths.results.display());
            println!("wrote {}", paths.summary.display());
            println!("wrote {}", paths.best.display());
            if outcome.failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for (job, msg) in &outcome.failures {
                    eprintln!("error: {} seed {}: {msg}", job.optimizer, job.seed);
                }
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Summarize { input, out, t_interval } => {
            let f = File::open(&input).with_context(|| format!("cannot open {}", input.display()))?;
            let rows = results::read_rows(BufReader::new(f))
                .with_context(|| format!("cannot parse {}", input.display()))?;
            let interval = if t_interval { Interval::StudentT } else { Interval::Normal };
            let summary = results::summarize(&rows, interval);
            let f = File::create(&out).with_context(|| format!("cannot create {}", out.display()))?;
            results::write_summary(f, &summary)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
