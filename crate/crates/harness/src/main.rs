use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ssa_harness::artifacts::{self, read_csv, write_csv, MeasurementRow};
use ssa_harness::experiment;
use ssa_harness::ExperimentConfig;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Telescope pointing with a double deep Q-network, tracked by an EKF.
#[derive(Debug, Parser)]
#[command(name = "ssa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full experiment: training, paired random baseline, tracking.
    Train(Common),
    /// Greedy evaluation of a saved network.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Run whose evaluation seeds are used.
        #[arg(long, default_value_t = 1)]
        run: usize,
    },
    /// Random policy only, at the experiment's evaluation points.
    Baseline(Common),
    /// Run the EKF over a saved measurement log.
    Track {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        measurements: PathBuf,
    },
    /// Dump truth orbits and telescope-frame paths.
    Simulate(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML file, or `default` for the embedded defaults.
    #[arg(long, default_value = "default")]
    config: String,
    /// Master seed (overrides the config).
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training iterations (overrides the config).
    #[arg(long)]
    iterations: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(iterations) = self.iterations {
            cfg.train.iterations = iterations;
        }
        cfg.validate()?;
        let out = cfg.output_dir.clone();
        Ok((cfg, out))
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            let (cfg, out) = common.resolve()?;
            let records = experiment::run_experiment(&cfg, &out)?;
            let last = records.rewards.iter().map(|r| r.iteration).max();
            match last {
                Some(it) => {
                    for policy in [artifacts::Policy::Trained, artifacts::Policy::Random] {
                        let v: Vec<f64> = records
                            .rewards
                            .iter()
                            .filter(|r| r.iteration == it && r.policy == policy)
                            .map(|r| r.average_return)
                            .collect();
                        let (mean, std) = artifacts::mean_std(&v);
                        println!("iteration {it} {}: mean return {mean:.3} (std {std:.3})", policy.as_str());
                    }
                }
                None => println!("no evaluation points"),
            }
            println!("artifacts written to {}", out.display());
        }
        Command::Evaluate { common, checkpoint, run } => {
            let (cfg, _) = common.resolve()?;
            let (trained, random) = experiment::evaluate_checkpoint(&cfg, &checkpoint, run)?;
            println!("greedy mean return {trained} over {} episodes (random {random})", cfg.train.eval_episodes);
        }
        Command::Baseline(common) => {
            let (cfg, out) = common.resolve()?;
            experiment::run_baseline(&cfg, &out)?;
            println!("artifacts written to {}", out.display());
        }
        Command::Track { common, measurements } => {
            let (cfg, out) = common.resolve()?;
            let rows: Vec<MeasurementRow> = read_csv(&measurements)?;
            let traces = experiment::track_measurements(&cfg, &rows)?;
            ensure_dir(&out)?;
            let path = out.join(artifacts::TRACK_TRACES);
            write_csv(&path, &traces)?;
            println!("{} rows written to {}", traces.len(), path.display());
        }
        Command::Simulate(common) => {
            let (cfg, out) = common.resolve()?;
            let rows = experiment::simulate(&cfg)?;
            ensure_dir(&out)?;
            let path = out.join(artifacts::SIM_TRUTH);
            write_csv(&path, &rows)?;
            println!("{} rows written to {}", rows.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
