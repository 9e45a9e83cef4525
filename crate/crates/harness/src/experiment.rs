//! The repeated-run experiment: train, evaluate trained and random policies
//! on paired episode seeds, track both policies' detections, and write the
//! CSV artifacts.
//!
//! Seeds: run `r` (0-based) uses `derive_seed(master, RUN, r)`. Within a run
//! the core derives training, evaluation and agent streams from that seed;
//! the random policy at evaluation iteration `i` draws from
//! `derive_seed(run_seed, BASELINE, i)`.

use crate::artifacts::{
    self, mean_std, AggregateRow, CovarianceRow, MeasurementRow, Policy, RewardRow, TraceRow, TruthRow,
};
use crate::checkpoint;
use crate::config::ExperimentConfig;
use anyhow::{ensure, Context, Result};
use serde::Serialize;
use ssa_core::astro::{AerVector, OrbitElements};
use ssa_core::ddqn::{argmax, eval_episode_seeds, random_policy, train_with, QNetwork, Workspace};
use ssa_core::env::{rollout, EpisodeLog, SensorEnv};
use ssa_core::rng::{derive_seed, rng_from_seed, stream};
use ssa_core::sensor::{in_fov, Action, Measurement, TelescopePointing};
use ssa_core::tracking::run_tracking_episode;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub fn run_seed(master: u64, run_index: usize) -> u64 {
    derive_seed(master, stream::RUN, run_index as u64)
}

/// Greedy action of `net` for a raw observation.
pub fn greedy_action(
    net: &QNetwork<f32>,
    obs: &[f64],
    scale: f64,
    ws: &mut Workspace<f32>,
) -> ssa_core::Result<Action> {
    let input: Vec<f32> = obs.iter().map(|&v| (v * scale) as f32).collect();
    Action::from_index(argmax(net.forward_batch(&input, 1, ws)?))
}

/// Policy under evaluation.
#[derive(Debug, Clone, Copy)]
pub enum EvalPolicy<'a> {
    Greedy { net: &'a QNetwork<f32>, observation_scale: f64 },
    /// Uniform random actions from a stream seeded with this value.
    Random { seed: u64 },
}

/// Plays one episode per seed; returns the mean return and every episode log.
pub fn evaluate_policy(env: &mut SensorEnv, policy: EvalPolicy<'_>, seeds: &[u64]) -> Result<(f64, Vec<EpisodeLog>)> {
    ensure!(!seeds.is_empty(), "evaluation needs at least one episode");
    let mut logs = Vec::with_capacity(seeds.len());
    match policy {
        EvalPolicy::Greedy { net, observation_scale } => {
            let mut ws = Workspace::new();
            for &seed in seeds {
                logs.push(rollout(env, seed, |obs| greedy_action(net, obs, observation_scale, &mut ws))?);
            }
        }
        EvalPolicy::Random { seed } => {
            let mut rng = rng_from_seed(seed);
            for &s in seeds {
                logs.push(rollout(env, s, |_| Ok(random_policy(&mut rng)))?);
            }
        }
    }
    let mean = logs.iter().map(EpisodeLog::total_reward).sum::<f64>() / seeds.len() as f64;
    Ok((mean, logs))
}

fn track(cfg: &ExperimentConfig, orbits: &[OrbitElements], log: &[Vec<Measurement>]) -> Result<Vec<Vec<f64>>> {
    Ok(run_tracking_episode(
        orbits,
        log,
        cfg.sensor.dt_s,
        &cfg.earth_model(),
        &cfg.ekf_config(),
    )?)
}

/// Per-step log-traces when nothing is ever measured.
pub fn predict_only_traces(cfg: &ExperimentConfig, orbits: &[OrbitElements]) -> Result<Vec<Vec<f64>>> {
    track(cfg, orbits, &vec![Vec::new(); cfg.env.episode_steps])
}

/// Everything one run contributes to the artifacts.
#[derive(Debug, Clone, Default)]
pub struct RunRecords {
    pub rewards: Vec<RewardRow>,
    pub covariance_trained: Vec<CovarianceRow>,
    pub covariance_random: Vec<CovarianceRow>,
    pub traces: Vec<TraceRow>,
    pub measurements: Vec<MeasurementRow>,
}

impl RunRecords {
    fn extend(&mut self, other: RunRecords) {
        self.rewards.extend(other.rewards);
        self.covariance_trained.extend(other.covariance_trained);
        self.covariance_random.extend(other.covariance_random);
        self.traces.extend(other.traces);
        self.measurements.extend(other.measurements);
    }
}

fn covariance_rows(run_id: usize, iteration: usize, traces: &[Vec<f64>]) -> Vec<CovarianceRow> {
    traces
        .iter()
        .enumerate()
        .map(|(satellite_id, series)| CovarianceRow {
            run_id,
            iteration,
            satellite_id,
            final_log_trace: *series.last().expect("episodes have at least one step"),
        })
        .collect()
}

fn trace_rows(run_id: usize, policy: Policy, traces: &[Vec<f64>]) -> Vec<TraceRow> {
    let mut rows = Vec::new();
    for (satellite_id, series) in traces.iter().enumerate() {
        for (k, &log_trace) in series.iter().enumerate() {
            rows.push(TraceRow {
                run_id,
                policy,
                satellite_id,
                step: k + 1,
                log_trace,
            });
        }
    }
    rows
}

fn measurement_rows(run_id: usize, policy: Policy, log: &EpisodeLog) -> Vec<MeasurementRow> {
    let mut rows = Vec::new();
    for (k, (step, pointing)) in log.measurements.iter().zip(&log.pointings).enumerate() {
        for m in step {
            rows.push(MeasurementRow {
                run_id,
                policy,
                step: k + 1,
                time: m.time,
                pointing_az: pointing.azimuth,
                pointing_el: pointing.elevation,
                satellite_id: m.satellite_id,
                az: m.aer.azimuth,
                el: m.aer.elevation,
                range: m.aer.range,
                x: m.eci_position.x,
                y: m.eci_position.y,
                z: m.eci_position.z,
            });
        }
    }
    rows
}

/// Random-policy evaluation at one evaluation iteration.
struct RandomEval {
    average_return: f64,
    log: EpisodeLog,
    traces: Vec<Vec<f64>>,
}

fn random_eval(
    cfg: &ExperimentConfig,
    env: &mut SensorEnv,
    orbits: &[OrbitElements],
    run_seed: u64,
    iteration: usize,
    seeds: &[u64],
) -> Result<RandomEval> {
    let seed = derive_seed(run_seed, stream::BASELINE, iteration as u64);
    let (average_return, mut logs) = evaluate_policy(env, EvalPolicy::Random { seed }, seeds)?;
    let log = logs.swap_remove(0);
    let traces = track(cfg, orbits, &log.measurements)?;
    Ok(RandomEval {
        average_return,
        log,
        traces,
    })
}

/// Final-episode rows (the EKF series and the detections) for one policy.
fn final_episode(records: &mut RunRecords, run_id: usize, policy: Policy, log: &EpisodeLog, traces: &[Vec<f64>]) {
    records.traces.extend(trace_rows(run_id, policy, traces));
    records.measurements.extend(measurement_rows(run_id, policy, log));
}

/// Trains one run and evaluates both policies at every evaluation point.
pub fn train_run(cfg: &ExperimentConfig, run_index: usize) -> Result<(RunRecords, QNetwork<f32>)> {
    let run_id = run_index + 1;
    let seed = run_seed(cfg.seed, run_index);
    let train_cfg = cfg.train_config(seed);
    let mut env = SensorEnv::new(cfg.env_config())?;
    let orbits = env.orbits().to_vec();
    let mut records = RunRecords::default();
    let mut last: Option<(EpisodeLog, Vec<Vec<f64>>, RandomEval)> = None;
    // The hook can only return core errors; the full one is kept here.
    let mut hook_error = None;

    let outcome = train_with::<f32, _, _>(&mut env, &train_cfg, |env, point| {
        let eval = |env: &mut SensorEnv| -> Result<_> {
            let greedy = EvalPolicy::Greedy {
                net: point.network,
                observation_scale: point.observation_scale,
            };
            let (_, mut logs) = evaluate_policy(env, greedy, &point.episode_seeds[..1])?;
            let log = logs.swap_remove(0);
            let traces = track(cfg, &orbits, &log.measurements)?;
            let random = random_eval(cfg, env, &orbits, seed, point.iteration, point.episode_seeds)?;
            Ok((log, traces, random))
        };
        let (log, traces, random) = match eval(env) {
            Ok(v) => v,
            Err(e) => {
                hook_error = Some(e.context(format!("evaluation at iteration {}", point.iteration)));
                return Err(ssa_core::Error::InvalidConfig("evaluation failed"));
            }
        };
        records.rewards.push(RewardRow {
            run_id,
            iteration: point.iteration,
            policy: Policy::Trained,
            average_return: point.average_return,
        });
        records.rewards.push(RewardRow {
            run_id,
            iteration: point.iteration,
            policy: Policy::Random,
            average_return: random.average_return,
        });
        records.covariance_trained.extend(covariance_rows(run_id, point.iteration, &traces));
        records.covariance_random.extend(covariance_rows(run_id, point.iteration, &random.traces));
        last = Some((log, traces, random));
        Ok(())
    });
    let outcome = match (outcome, hook_error) {
        (Ok(o), _) => o,
        (Err(_), Some(e)) => return Err(e.context(format!("run {run_id}"))),
        (Err(e), None) => return Err(anyhow::Error::new(e).context(format!("run {run_id}"))),
    };

    if let Some((log, traces, random)) = last {
        final_episode(&mut records, run_id, Policy::Trained, &log, &traces);
        final_episode(&mut records, run_id, Policy::Random, &random.log, &random.traces);
        records.traces.extend(trace_rows(run_id, Policy::PredictOnly, &predict_only_traces(cfg, &orbits)?));
    }
    Ok((records, outcome.network))
}

/// Random policy only, at the same evaluation iterations and seeds as a
/// training run.
pub fn baseline_run(cfg: &ExperimentConfig, run_index: usize) -> Result<RunRecords> {
    let run_id = run_index + 1;
    let seed = run_seed(cfg.seed, run_index);
    let seeds = eval_episode_seeds(seed, cfg.train.eval_episodes);
    let mut env = SensorEnv::new(cfg.env_config())?;
    let orbits = env.orbits().to_vec();
    let mut records = RunRecords::default();
    let mut last = None;
    let interval = cfg.train.eval_interval;
    for iteration in (interval..=cfg.train.iterations).step_by(interval) {
        let random = random_eval(cfg, &mut env, &orbits, seed, iteration, &seeds)?;
        records.rewards.push(RewardRow {
            run_id,
            iteration,
            policy: Policy::Random,
            average_return: random.average_return,
        });
        records.covariance_random.extend(covariance_rows(run_id, iteration, &random.traces));
        last = Some(random);
    }
    if let Some(random) = last {
        final_episode(&mut records, run_id, Policy::Random, &random.log, &random.traces);
        records.traces.extend(trace_rows(run_id, Policy::PredictOnly, &predict_only_traces(cfg, &orbits)?));
    }
    Ok(records)
}

pub fn aggregate(records: &RunRecords) -> Vec<AggregateRow> {
    let mut returns: BTreeMap<(Policy, usize), Vec<f64>> = BTreeMap::new();
    for r in &records.rewards {
        returns.entry((r.policy, r.iteration)).or_default().push(r.average_return);
    }
    let mut traces: BTreeMap<(Policy, usize, usize), Vec<f64>> = BTreeMap::new();
    for (policy, rows) in [
        (Policy::Trained, &records.covariance_trained),
        (Policy::Random, &records.covariance_random),
    ] {
        for r in rows {
            traces
                .entry((policy, r.iteration, r.satellite_id))
                .or_default()
                .push(r.final_log_trace);
        }
    }
    let row = |metric: &str, policy, iteration, satellite_id, values: &[f64]| {
        let (mean, std) = mean_std(values);
        AggregateRow {
            metric: metric.to_owned(),
            policy,
            iteration,
            satellite_id,
            runs: values.len(),
            mean,
            std,
        }
    };
    let mut out: Vec<AggregateRow> = returns
        .iter()
        .map(|(&(policy, iteration), v)| row("average_return", policy, iteration, None, v))
        .collect();
    out.extend(
        traces
            .iter()
            .map(|(&(policy, iteration, sat), v)| row("final_log_trace", policy, iteration, Some(sat), v)),
    );
    out
}

#[derive(Debug, Serialize)]
struct RunManifest {
    run_id: usize,
    /// Hex, since TOML integers stop at 2⁶³ − 1.
    run_seed: String,
    eval_episode_seeds: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    version: String,
    seed_scheme: String,
    master_seed: String,
    started_unix_s: f64,
    finished_unix_s: f64,
    elapsed_s: f64,
    files: Vec<String>,
    runs: Vec<RunManifest>,
    config: ExperimentConfig,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn write_manifest(dir: &Path, cfg: &ExperimentConfig, command: &str, files: &[&str], started: f64, clock: Instant) -> Result<()> {
    let runs = (0..cfg.runs)
        .map(|r| {
            let seed = run_seed(cfg.seed, r);
            RunManifest {
                run_id: r + 1,
                run_seed: format!("{seed:#018x}"),
                eval_episode_seeds: eval_episode_seeds(seed, cfg.train.eval_episodes)
                    .iter()
                    .map(|s| format!("{s:#018x}"))
                    .collect(),
            }
        })
        .collect();
    let manifest = Manifest {
        command: command.to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        seed_scheme: "run_seed = derive_seed(master, RUN, run_id - 1); derive_seed(p, label, i) = \
                      splitmix64(splitmix64(splitmix64(p) ^ label) ^ i)"
            .to_owned(),
        master_seed: format!("{:#018x}", cfg.seed),
        started_unix_s: started,
        finished_unix_s: unix_now(),
        elapsed_s: clock.elapsed().as_secs_f64(),
        files: files.iter().map(|f| (*f).to_owned()).collect(),
        runs,
        config: cfg.clone(),
    };
    let path = dir.join(artifacts::MANIFEST);
    std::fs::write(&path, toml::to_string(&manifest)?).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_records(dir: &Path, records: &RunRecords, with_trained: bool) -> Result<Vec<&'static str>> {
    use artifacts::*;
    write_csv(&dir.join(REWARD_CURVE), &records.rewards)?;
    write_csv(&dir.join(COVARIANCE_RANDOM), &records.covariance_random)?;
    write_csv(&dir.join(FINAL_EPISODE_TRACES), &records.traces)?;
    write_csv(&dir.join(FINAL_EPISODE_MEASUREMENTS), &records.measurements)?;
    write_csv(&dir.join(AGGREGATE), &aggregate(records))?;
    let mut files = vec![
        REWARD_CURVE,
        COVARIANCE_RANDOM,
        FINAL_EPISODE_TRACES,
        FINAL_EPISODE_MEASUREMENTS,
        AGGREGATE,
    ];
    if with_trained {
        write_csv(&dir.join(COVARIANCE_TRAINED), &records.covariance_trained)?;
        files.push(COVARIANCE_TRAINED);
    }
    files.sort_unstable();
    Ok(files)
}

pub fn checkpoint_path(dir: &Path, run_id: usize) -> PathBuf {
    dir.join(artifacts::CHECKPOINT_DIR).join(format!("run_{run_id}.qnet"))
}

/// Full experiment: every run, then the combined artifacts in `dir`.
/// Maps `f` over run indices on up to one thread per core. Runs share no
/// state, so the results do not depend on the thread count.
fn per_run<T: Send>(runs: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    per_run_on(workers, runs, f)
}

fn per_run_on<T: Send>(workers: usize, runs: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let workers = workers.min(runs);
    if workers <= 1 {
        return (0..runs).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut done: Vec<(usize, Result<T>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let r = next.fetch_add(1, Ordering::Relaxed);
                        if r >= runs {
                            break out;
                        }
                        out.push((r, f(r)));
                    }
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("run thread panicked")).collect()
    });
    done.sort_by_key(|(r, _)| *r);
    done.into_iter().map(|(_, res)| res).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<RunRecords> {
    cfg.validate()?;
    let started = unix_now();
    let clock = Instant::now();
    create_dir(&dir.join(artifacts::CHECKPOINT_DIR))?;
    let mut all = RunRecords::default();
    for (r, (records, net)) in per_run(cfg.runs, |r| train_run(cfg, r))?.into_iter().enumerate() {
        checkpoint::save(&net, &checkpoint_path(dir, r + 1))?;
        all.extend(records);
    }
    let files = write_records(dir, &all, true)?;
    write_manifest(dir, cfg, "train", &files, started, clock)?;
    Ok(all)
}

pub fn run_baseline(cfg: &ExperimentConfig, dir: &Path) -> Result<RunRecords> {
    cfg.validate()?;
    let started = unix_now();
    let clock = Instant::now();
    create_dir(dir)?;
    let mut all = RunRecords::default();
    for records in per_run(cfg.runs, |r| baseline_run(cfg, r))? {
        all.extend(records);
    }
    let files = write_records(dir, &all, false)?;
    write_manifest(dir, cfg, "baseline", &files, started, clock)?;
    Ok(all)
}

/// Greedy and random mean returns of a saved network on the evaluation
/// seeds of run `run_id`.
pub fn evaluate_checkpoint(cfg: &ExperimentConfig, path: &Path, run_id: usize) -> Result<(f64, f64)> {
    ensure!(run_id >= 1, "run ids start at 1");
    let net = checkpoint::load::<f32>(path)?;
    let mut env = SensorEnv::new(cfg.env_config())?;
    ensure!(
        net.input_len() == cfg.env_config().observation_len(),
        "checkpoint expects {} inputs but the environment produces {}",
        net.input_len(),
        cfg.env_config().observation_len()
    );
    let seed = run_seed(cfg.seed, run_id - 1);
    let seeds = eval_episode_seeds(seed, cfg.train.eval_episodes);
    let scale = cfg.train_config(seed).observation_scale;
    let (trained, _) = evaluate_policy(&mut env, EvalPolicy::Greedy { net: &net, observation_scale: scale }, &seeds)?;
    let random_seed = derive_seed(seed, stream::BASELINE, 0);
    let (random, _) = evaluate_policy(&mut env, EvalPolicy::Random { seed: random_seed }, &seeds)?;
    Ok((trained, random))
}

/// Rebuilds measurement logs from a CSV and runs the EKF over each
/// (run, policy) group.
pub fn track_measurements(cfg: &ExperimentConfig, rows: &[MeasurementRow]) -> Result<Vec<TraceRow>> {
    let env_cfg = cfg.env_config();
    let sensor = cfg.sensor_config();
    let earth = cfg.earth_model();
    let env = SensorEnv::new(env_cfg)?;
    let mut groups: BTreeMap<(usize, Policy), Vec<Vec<Measurement>>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        ensure!(
            (1..=env_cfg.episode_steps).contains(&r.step),
            "measurement {}: step {} outside 1..={}",
            i + 1,
            r.step,
            env_cfg.episode_steps
        );
        ensure!(
            r.satellite_id < env_cfg.n_satellites,
            "measurement {}: satellite {} outside the constellation",
            i + 1,
            r.satellite_id
        );
        let log = groups
            .entry((r.run_id, r.policy))
            .or_insert_with(|| vec![Vec::new(); env_cfg.episode_steps]);
        let aer = AerVector::new(r.az, r.el, r.range);
        log[r.step - 1].push(Measurement::from_aer(r.satellite_id, aer, &sensor, r.time, &earth));
    }
    let mut out = Vec::new();
    for ((run_id, policy), log) in &groups {
        out.extend(trace_rows(*run_id, *policy, &track(cfg, env.orbits(), log)?));
    }
    Ok(out)
}

/// Truth table of every satellite at every step, with FoV membership for the
/// telescope parked at its initial pointing.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Vec<TruthRow>> {
    let env = SensorEnv::new(cfg.env_config())?;
    let pointing = TelescopePointing::default();
    let sensor = cfg.sensor_config();
    let mut rows = Vec::new();
    for satellite_id in 0..cfg.env.n_satellites {
        for step in 0..=cfg.env.episode_steps {
            let t = &env.truth_at(step)[satellite_id];
            rows.push(TruthRow {
                satellite_id,
                step,
                x: t.state.position.x,
                y: t.state.position.y,
                z: t.state.position.z,
                az: t.aer.azimuth,
                el: t.aer.elevation,
                range: t.aer.range,
                in_fov: in_fov(&t.aer, &pointing, &sensor),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threaded_runs_match_sequential() {
        let mut cfg = ExperimentConfig { runs: 3, ..ExperimentConfig::default() };
        cfg.train.iterations = 4;
        cfg.train.eval_interval = 2;
        cfg.train.eval_episodes = 2;
        cfg.train.episodes_per_iteration = 1;
        cfg.train.hidden = vec![16];
        let one = per_run_on(1, cfg.runs, |r| train_run(&cfg, r)).unwrap();
        let many = per_run_on(3, cfg.runs, |r| train_run(&cfg, r)).unwrap();
        for ((ra, na), (rb, nb)) in one.iter().zip(&many) {
            assert_eq!(ra.rewards, rb.rewards);
            assert_eq!(ra.traces, rb.traces);
            assert_eq!(na, nb);
        }
        let err = per_run_on(2, 4, |r| if r == 2 { anyhow::bail!("run {r} failed") } else { Ok(r) }).unwrap_err();
        assert_eq!(err.to_string(), "run 2 failed");
    }
}
