//! Experiment configuration as read from TOML. Angles are in degrees here and
//! converted to radians when building the core configs.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use ssa_core::astro::{EarthModel, SensorSite};
use ssa_core::ddqn::{EpsilonSchedule, TrainConfig};
use ssa_core::env::EnvConfig;
use ssa_core::sensor::SensorConfig;
use ssa_core::tracking::EkfConfig;
use std::path::{Path, PathBuf};

/// The default configuration, with every key spelled out.
pub const DEFAULT_TOML: &str = include_str!("../default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub runs: usize,
    /// Master seed; every run, episode and policy stream is derived from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub env: EnvSection,
    pub sensor: SensorSection,
    pub earth: EarthSection,
    pub ekf: EkfSection,
    pub train: TrainSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub n_satellites: usize,
    pub episode_steps: usize,
    pub orbit_radius_m: f64,
    pub constellation_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSection {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub fov_half_angle_deg: f64,
    pub slew_rate_deg_per_s: f64,
    pub sigma_theta_rad: f64,
    pub sigma_r_m: f64,
    pub dt_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EarthSection {
    pub mu: f64,
    pub omega_rad_per_s: f64,
    pub radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EkfSection {
    pub process_noise_accel: f64,
    pub initial_pos_sigma_m: f64,
    pub initial_vel_sigma_m_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub iterations: usize,
    pub episodes_per_iteration: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub target_sync_period: u64,
    pub hidden: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            runs: 5,
            seed: 0,
            output_dir: PathBuf::from("out"),
            env: EnvSection::default(),
            sensor: SensorSection::default(),
            earth: EarthSection::default(),
            ekf: EkfSection::default(),
            train: TrainSection::default(),
        }
    }
}

impl Default for EnvSection {
    fn default() -> Self {
        let env = EnvConfig::default();
        Self {
            n_satellites: env.n_satellites,
            episode_steps: env.episode_steps,
            orbit_radius_m: env.orbit_radius,
            constellation_seed: env.seed,
        }
    }
}

impl Default for SensorSection {
    fn default() -> Self {
        Self {
            latitude_deg: 10.0,
            longitude_deg: -60.0,
            fov_half_angle_deg: 15.0,
            slew_rate_deg_per_s: 2.0,
            sigma_theta_rad: 1e-5,
            sigma_r_m: 10.0,
            dt_s: 30.0,
        }
    }
}

impl Default for EarthSection {
    fn default() -> Self {
        let e = EarthModel::default();
        Self {
            mu: e.mu,
            omega_rad_per_s: e.omega,
            radius_m: e.r_earth,
        }
    }
}

impl Default for EkfSection {
    fn default() -> Self {
        let e = EkfConfig::default();
        Self {
            process_noise_accel: e.process_noise_accel,
            initial_pos_sigma_m: e.initial_pos_sigma,
            initial_vel_sigma_m_per_s: e.initial_vel_sigma,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            iterations: t.iterations,
            episodes_per_iteration: t.episodes_per_iteration,
            eval_interval: t.eval_interval,
            eval_episodes: t.eval_episodes,
            alpha: t.alpha,
            gamma: t.gamma,
            epsilon_start: t.epsilon.start,
            epsilon_end: t.epsilon.end,
            epsilon_decay_steps: t.epsilon.decay_steps,
            batch_size: t.batch_size,
            buffer_capacity: t.buffer_capacity,
            target_sync_period: t.target_sync_period,
            hidden: t.hidden,
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML text; `origin` names the source in error messages.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            // Type errors only carry a span, so quote the offending line.
            let location = e
                .span()
                .map(|s| {
                    let line_no = text[..s.start].matches('\n').count() + 1;
                    let line = text.lines().nth(line_no - 1).unwrap_or("").trim();
                    format!(" (line {line_no}: `{line}`)")
                })
                .unwrap_or_default();
            anyhow::anyhow!("{origin}{location}: {}", e.message().trim())
        })?;
        cfg.validate().with_context(|| format!("{origin}: invalid configuration"))?;
        Ok(cfg)
    }

    /// Loads a config file, or the embedded defaults when `source` is `default`.
    pub fn load(source: &str) -> Result<Self> {
        if source == "default" {
            return Self::from_toml(DEFAULT_TOML, "default config");
        }
        let path = Path::new(source);
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        self.env_config().validate()?;
        self.ekf_config().validate()?;
        self.train_config(0).validate()?;
        Ok(())
    }

    pub fn earth_model(&self) -> EarthModel {
        EarthModel {
            mu: self.earth.mu,
            omega: self.earth.omega_rad_per_s,
            r_earth: self.earth.radius_m,
        }
    }

    pub fn sensor_config(&self) -> SensorConfig {
        let s = &self.sensor;
        SensorConfig {
            site: SensorSite {
                latitude: s.latitude_deg.to_radians(),
                longitude: s.longitude_deg.to_radians(),
            },
            fov_half_angle: s.fov_half_angle_deg.to_radians(),
            slew_rate: s.slew_rate_deg_per_s.to_radians(),
            sigma_theta: s.sigma_theta_rad,
            sigma_r: s.sigma_r_m,
            dt: s.dt_s,
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            n_satellites: self.env.n_satellites,
            episode_steps: self.env.episode_steps,
            sensor: self.sensor_config(),
            orbit_radius: self.env.orbit_radius_m,
            seed: self.env.constellation_seed,
            earth: self.earth_model(),
        }
    }

    pub fn ekf_config(&self) -> EkfConfig {
        EkfConfig {
            process_noise_accel: self.ekf.process_noise_accel,
            initial_pos_sigma: self.ekf.initial_pos_sigma_m,
            initial_vel_sigma: self.ekf.initial_vel_sigma_m_per_s,
        }
    }

    /// Training config of one run, seeded with that run's seed.
    pub fn train_config(&self, rng_seed: u64) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            iterations: t.iterations,
            episodes_per_iteration: t.episodes_per_iteration,
            eval_interval: t.eval_interval,
            eval_episodes: t.eval_episodes,
            alpha: t.alpha,
            gamma: t.gamma,
            epsilon: EpsilonSchedule {
                start: t.epsilon_start,
                end: t.epsilon_end,
                decay_steps: t.epsilon_decay_steps,
            },
            batch_size: t.batch_size,
            buffer_capacity: t.buffer_capacity,
            target_sync_period: t.target_sync_period,
            hidden: t.hidden.clone(),
            observation_scale: TrainConfig::default().observation_scale,
            rng_seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_defaults_match_core_defaults() {
        let cfg = ExperimentConfig::load("default").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.env_config(), EnvConfig::default());
        assert_eq!(cfg.ekf_config(), EkfConfig::default());
        assert_eq!(cfg.train_config(0), TrainConfig::default());
    }

    #[test]
    fn empty_file_is_the_default_experiment() {
        assert_eq!(ExperimentConfig::from_toml("", "empty").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn partial_override() {
        let cfg = ExperimentConfig::from_toml("runs = 2\n[train]\niterations = 7\n", "t").unwrap();
        assert_eq!(cfg.runs, 2);
        assert_eq!(cfg.train.iterations, 7);
        assert_eq!(cfg.train.batch_size, 64);
    }

    #[test]
    fn errors_name_the_key() {
        let err = ExperimentConfig::from_toml("[train]\nalhpa = 0.1\n", "t").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("alhpa") && msg.contains("line 2"), "{msg}");
        let err = ExperimentConfig::from_toml("[sensor]\ndt_s = \"fast\"\n", "t").unwrap_err();
        assert!(format!("{err:#}").contains("dt_s"), "{err:#}");
        let err = ExperimentConfig::from_toml("runs = 0\n", "t").unwrap_err();
        assert!(format!("{err:#}").contains("runs"), "{err:#}");
        assert!(ExperimentConfig::from_toml("[train]\ngamma = 1.5\n", "t").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap(), "echo").unwrap(), cfg);
    }
}
