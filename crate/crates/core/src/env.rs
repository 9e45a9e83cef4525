//! Discrete-time telescope pointing environment.
//!
//! One scenario is fixed by the configuration seed: the same constellation is
//! flown in every episode, and the per-episode seed only drives detection
//! noise. Each step slews the telescope, advances time by `dt`, and rewards
//! one point per satellite inside the field of view.
//!
//! The observation is `[az, el, Δaz₀, Δel₀, Δaz₁, Δel₁, …]`: the boresight
//! followed by every satellite's signed offset from it (satellite minus
//! boresight, azimuth wrapped to [−π, π]), including satellites below the
//! horizon.

use crate::astro::{
    eci_to_aer, generate_constellation, propagate_circular, AerVector, EarthModel, OrbitElements,
    StateVector,
};
use crate::ddqn::{Environment, Step};
use crate::rng::{rng_from_seed, SimRng};
use crate::sensor::{apply_action, in_fov, measure, signed_offsets, Action, Measurement, SensorConfig, TelescopePointing};
use crate::{Error, Result};
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvConfig {
    pub n_satellites: usize,
    pub episode_steps: usize,
    pub sensor: SensorConfig,
    pub orbit_radius: f64,
    /// Seed of the constellation, constant across episodes.
    pub seed: u64,
    pub earth: EarthModel,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_satellites: 25,
            episode_steps: 20,
            sensor: SensorConfig::default(),
            orbit_radius: 7e6,
            seed: 42,
            earth: EarthModel::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_satellites == 0 {
            return Err(Error::InvalidConfig("n_satellites must be at least 1"));
        }
        if self.episode_steps == 0 {
            return Err(Error::InvalidConfig("episode_steps must be at least 1"));
        }
        self.earth.validate()?;
        self.sensor.validate()
    }

    pub fn observation_len(&self) -> usize {
        2 + 2 * self.n_satellites
    }
}

/// Truth of one satellite at one step time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteTruth {
    pub state: StateVector,
    pub aer: AerVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub measurements: Vec<Measurement>,
}

#[derive(Debug, Clone)]
pub struct SensorEnv {
    cfg: EnvConfig,
    orbits: Vec<OrbitElements>,
    /// `truth[k][i]` is satellite `i` at time `k·dt`, for k in 0..=episode_steps.
    truth: Vec<Vec<SatelliteTruth>>,
    pointing: TelescopePointing,
    step_index: usize,
    noise: SimRng,
}

impl SensorEnv {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let orbits = generate_constellation(cfg.n_satellites, cfg.orbit_radius, cfg.seed, &cfg.earth)?;
        let truth = (0..=cfg.episode_steps)
            .map(|k| {
                let t = k as f64 * cfg.sensor.dt;
                orbits
                    .iter()
                    .map(|el| {
                        let state = propagate_circular(el, t, &cfg.earth);
                        let aer = eci_to_aer(&state.position, &cfg.sensor.site, t, &cfg.earth)?;
                        Ok(SatelliteTruth { state, aer })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg,
            orbits,
            truth,
            pointing: TelescopePointing::default(),
            step_index: 0,
            noise: rng_from_seed(0),
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn orbits(&self) -> &[OrbitElements] {
        &self.orbits
    }

    /// Truth of every satellite at step `k` (time `k·dt`).
    pub fn truth_at(&self, k: usize) -> &[SatelliteTruth] {
        &self.truth[k]
    }

    pub fn pointing(&self) -> TelescopePointing {
        self.pointing
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.cfg.sensor.dt
    }

    pub fn is_done(&self) -> bool {
        self.step_index >= self.cfg.episode_steps
    }

    pub fn reset(&mut self, episode_seed: u64) -> Vec<f64> {
        self.pointing = TelescopePointing::default();
        self.step_index = 0;
        self.noise = rng_from_seed(episode_seed);
        self.observation()
    }

    pub fn observation(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(self.cfg.observation_len());
        obs.push(self.pointing.azimuth);
        obs.push(self.pointing.elevation);
        for sat in &self.truth[self.step_index] {
            let (d_az, d_el) = signed_offsets(&sat.aer, &self.pointing);
            obs.push(d_az);
            obs.push(d_el);
        }
        obs
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if self.is_done() {
            return Err(Error::SteppedAfterDone);
        }
        self.step_index += 1;
        self.pointing = apply_action(&self.pointing, action, &self.cfg.sensor);
        let t = self.time();
        let mut measurements = Vec::new();
        for (id, sat) in self.truth[self.step_index].iter().enumerate() {
            if let Some(m) = measure(id, &sat.state, &self.pointing, &self.cfg.sensor, t, &self.cfg.earth, &mut self.noise)? {
                measurements.push(m);
            }
        }
        Ok(StepResult {
            observation: self.observation(),
            reward: measurements.len() as f64,
            done: self.is_done(),
            measurements,
        })
    }

    /// Number of satellites inside the field of view at step `k` for `pointing`,
    /// recounted from truth.
    pub fn count_in_fov(&self, k: usize, pointing: &TelescopePointing) -> usize {
        self.truth[k]
            .iter()
            .filter(|s| in_fov(&s.aer, pointing, &self.cfg.sensor))
            .count()
    }
}

impl Environment for SensorEnv {
    fn observation_len(&self) -> usize {
        self.cfg.observation_len()
    }

    fn action_count(&self) -> usize {
        Action::COUNT
    }

    fn reset(&mut self, episode_seed: u64) -> Vec<f64> {
        SensorEnv::reset(self, episode_seed)
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        let r = SensorEnv::step(self, Action::from_index(action)?)?;
        Ok(Step {
            observation: r.observation,
            reward: r.reward,
            done: r.done,
        })
    }
}

/// Everything that happened in one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeLog {
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    /// Pointing after each step's action.
    pub pointings: Vec<TelescopePointing>,
    /// Detections at each step, indexed like `rewards`.
    pub measurements: Vec<Vec<Measurement>>,
}

impl EpisodeLog {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Number of detections per satellite over the episode.
    pub fn detection_counts(&self, n_satellites: usize) -> Vec<usize> {
        let mut counts = alloc::vec![0; n_satellites];
        for m in self.measurements.iter().flatten() {
            counts[m.satellite_id] += 1;
        }
        counts
    }
}

/// Plays one episode, choosing actions from the raw observation with `policy`.
pub fn rollout<F>(env: &mut SensorEnv, episode_seed: u64, mut policy: F) -> Result<EpisodeLog>
where
    F: FnMut(&[f64]) -> Result<Action>,
{
    let mut obs = env.reset(episode_seed);
    let mut log = EpisodeLog::default();
    while !env.is_done() {
        let action = policy(&obs)?;
        let r = env.step(action)?;
        log.actions.push(action);
        log.rewards.push(r.reward);
        log.pointings.push(env.pointing());
        log.measurements.push(r.measurements);
        obs = r.observation;
    }
    Ok(log)
}

/// Total reward of a fixed action sequence of length `episode_steps`.
pub fn episode_return(actions: &[Action], cfg: &EnvConfig, episode_seed: u64) -> Result<f64> {
    if actions.len() != cfg.episode_steps {
        return Err(Error::ShapeMismatch {
            expected: cfg.episode_steps,
            actual: actions.len(),
        });
    }
    let mut env = SensorEnv::new(*cfg)?;
    let mut it = actions.iter();
    let log = rollout(&mut env, episode_seed, |_| Ok(*it.next().expect("length checked")))?;
    Ok(log.total_reward())
}

/// Best achievable return by exhaustive search over pointing trajectories.
/// The reward depends only on the pointing sequence, so states are merged by
/// pointing at each step; exponential only in the number of distinct pointings.
pub fn max_return(env: &SensorEnv) -> f64 {
    let cfg = env.config();
    let mut frontier: Vec<(TelescopePointing, f64)> = alloc::vec![(TelescopePointing::default(), 0.0)];
    for k in 1..=cfg.episode_steps {
        let mut next: Vec<(TelescopePointing, f64)> = Vec::new();
        for (p, total) in &frontier {
            for a in Action::ALL {
                let q = apply_action(p, a, &cfg.sensor);
                let value = total + env.count_in_fov(k, &q) as f64;
                match next.iter_mut().find(|(existing, _)| same_pointing(existing, &q)) {
                    Some(entry) => entry.1 = entry.1.max(value),
                    None => next.push((q, value)),
                }
            }
        }
        frontier = next;
    }
    frontier.iter().map(|(_, v)| *v).fold(0.0, f64::max)
}

fn same_pointing(a: &TelescopePointing, b: &TelescopePointing) -> bool {
    let d_az = (a.azimuth - b.azimuth).abs();
    d_az.min(core::f64::consts::TAU - d_az) < 1e-9 && (a.elevation - b.elevation).abs() < 1e-9
}
