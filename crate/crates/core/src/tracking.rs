//! Extended Kalman filter over the six-dimensional ECI state of a satellite.
//!
//! Prediction integrates two-body motion with RK4 and propagates the
//! covariance through a finite-difference Jacobian of that flow. Detections
//! arrive already converted to ECI positions, so the update is linear with
//! `H = [I₃ 0₃]` and the measurement nonlinearity lives in the mapped noise.

use crate::astro::{propagate_circular, two_body_rk4, EarthModel, OrbitElements, StateVector};
use crate::linalg::{symmetrize, Mat3, Mat6, Vec3, Vec6};
use crate::sensor::Measurement;
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Matrix6x3, SymmetricEigen};
#[allow(unused_imports)] // inherent float methods shadow it only when std is linked
use num_traits::Float;

/// Longest RK4 substep used by [`predict`] (s).
pub const MAX_SUBSTEP: f64 = 30.0;
/// Central-difference steps for the flow Jacobian: position (m), velocity (m/s).
pub const FLOW_JACOBIAN_STEPS: [f64; 2] = [1.0, 1e-3];
/// Innovation covariances worse conditioned than this are rejected.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EkfConfig {
    /// White-acceleration noise intensity q.
    pub process_noise_accel: f64,
    pub initial_pos_sigma: f64,
    pub initial_vel_sigma: f64,
}

impl Default for EkfConfig {
    fn default() -> Self {
        Self {
            process_noise_accel: 1e-6,
            initial_pos_sigma: 1e4,
            initial_vel_sigma: 10.0,
        }
    }
}

impl EkfConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if ok(self.process_noise_accel) && ok(self.initial_pos_sigma) && ok(self.initial_vel_sigma) {
            Ok(())
        } else {
            Err(Error::InvalidConfig("EKF noise settings must be non-negative"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackEstimate {
    pub state: StateVector,
    pub covariance: Mat6,
    /// Time the estimate refers to (s since the simulation epoch).
    pub epoch: f64,
    /// Time of the most recent measurement update, if any.
    pub last_update_time: Option<f64>,
}

impl TrackEstimate {
    pub fn trace(&self) -> f64 {
        self.covariance.trace()
    }
}

pub fn init_track(initial_state: StateVector, epoch: f64, cfg: &EkfConfig) -> TrackEstimate {
    let p = cfg.initial_pos_sigma * cfg.initial_pos_sigma;
    let v = cfg.initial_vel_sigma * cfg.initial_vel_sigma;
    TrackEstimate {
        state: initial_state,
        covariance: Mat6::from_diagonal(&Vec6::new(p, p, p, v, v, v)),
        epoch,
        last_update_time: None,
    }
}

fn flow(x: &StateVector, dt: f64, earth: &EarthModel) -> Result<StateVector> {
    let substeps = (dt / MAX_SUBSTEP).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;
    (0..substeps).try_fold(*x, |s, _| two_body_rk4(&s, h, earth))
}

/// Jacobian of the RK4 flow over `dt` with respect to the initial state.
pub fn flow_jacobian(x: &StateVector, dt: f64, earth: &EarthModel) -> Result<Mat6> {
    let base = x.to_vector();
    let mut jac = Mat6::zeros();
    for col in 0..6 {
        let h = FLOW_JACOBIAN_STEPS[col / 3];
        let mut plus = base;
        let mut minus = base;
        plus[col] += h;
        minus[col] -= h;
        let fp = flow(&StateVector::from_vector(&plus), dt, earth)?.to_vector();
        let fm = flow(&StateVector::from_vector(&minus), dt, earth)?.to_vector();
        jac.set_column(col, &((fp - fm) / (2.0 * h)));
    }
    Ok(jac)
}

/// Discrete white-acceleration process noise over `dt`.
pub fn process_noise(q: f64, dt: f64) -> Mat6 {
    let pos = q * dt * dt * dt / 3.0;
    let cross = q * dt * dt / 2.0;
    let vel = q * dt;
    let mut m = Mat6::zeros();
    for axis in 0..3 {
        m[(axis, axis)] = pos;
        m[(axis, axis + 3)] = cross;
        m[(axis + 3, axis)] = cross;
        m[(axis + 3, axis + 3)] = vel;
    }
    m
}

pub fn predict(track: &TrackEstimate, dt: f64, earth: &EarthModel, cfg: &EkfConfig) -> Result<TrackEstimate> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidConfig("prediction interval must be positive"));
    }
    let state = flow(&track.state, dt, earth)?;
    let f = flow_jacobian(&track.state, dt, earth)?;
    let covariance = symmetrize(&(f * track.covariance * f.transpose() + process_noise(cfg.process_noise_accel, dt)));
    Ok(TrackEstimate {
        state,
        covariance,
        epoch: track.epoch + dt,
        last_update_time: track.last_update_time,
    })
}

fn innovation_inverse(s: &Mat3) -> Result<Mat3> {
    let eig = SymmetricEigen::new(symmetrize(s)).eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_INNOVATION_CONDITION) {
        return Err(Error::SingularInnovation { condition });
    }
    s.try_inverse().ok_or(Error::SingularInnovation { condition })
}

/// Kalman gain for a position measurement with ECI noise `r`.
pub fn kalman_gain(covariance: &Mat6, r: &Mat3) -> Result<Matrix6x3<f64>> {
    let s = covariance.fixed_view::<3, 3>(0, 0) + r;
    let p_ht = covariance.fixed_view::<6, 3>(0, 0).into_owned();
    Ok(p_ht * innovation_inverse(&s)?)
}

/// Position-measurement update with a Joseph-form covariance.
pub fn update(track: &TrackEstimate, m: &Measurement) -> Result<TrackEstimate> {
    let k = kalman_gain(&track.covariance, &m.noise_eci)?;
    let innovation: Vec3 = m.eci_position - track.state.position;
    let state = StateVector::from_vector(&(track.state.to_vector() + k * innovation));
    let mut i_kh = Mat6::identity();
    {
        let mut left = i_kh.fixed_view_mut::<6, 3>(0, 0);
        left -= k;
    }
    let joseph = i_kh * track.covariance * i_kh.transpose() + k * m.noise_eci * k.transpose();
    Ok(TrackEstimate {
        state,
        covariance: symmetrize(&joseph),
        epoch: track.epoch,
        last_update_time: Some(m.time),
    })
}

pub fn log_trace(track: &TrackEstimate) -> Result<f64> {
    let trace = track.trace();
    if !(trace > 0.0) {
        return Err(Error::NonPositiveTrace { trace });
    }
    Ok(trace.ln())
}

/// Runs one filter per satellite over an episode of `measurement_log.len()`
/// steps of `dt` seconds. Tracks start from the true state at t = 0; at each
/// step the filter predicts, applies that step's detection of the satellite
/// if there is one, and records the log-trace.
pub fn run_tracking_episode(
    orbits: &[OrbitElements],
    measurement_log: &[Vec<Measurement>],
    dt: f64,
    earth: &EarthModel,
    cfg: &EkfConfig,
) -> Result<Vec<Vec<f64>>> {
    let mut tracks: Vec<TrackEstimate> = orbits
        .iter()
        .map(|el| init_track(propagate_circular(el, 0.0, earth), 0.0, cfg))
        .collect();
    let mut series = vec![Vec::with_capacity(measurement_log.len()); orbits.len()];
    for step in measurement_log {
        for (id, track) in tracks.iter_mut().enumerate() {
            let mut next = predict(track, dt, earth, cfg)?;
            for m in step.iter().filter(|m| m.satellite_id == id) {
                next = update(&next, m)?;
            }
            series[id].push(log_trace(&next)?);
            *track = next;
        }
        if let Some(m) = step.iter().find(|m| m.satellite_id >= orbits.len()) {
            return Err(Error::IndexOutOfRange {
                index: m.satellite_id,
                len: orbits.len(),
            });
        }
    }
    Ok(series)
}
