use super::{EarthModel, OrbitElements, StateVector};
use crate::linalg::Vec3;
use crate::rng::rng_from_seed;
use crate::{Error, Result};
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use rand::Rng;
#[allow(unused_imports)] // inherent float methods shadow it only when std is linked
use num_traits::Float;

/// `n` circular orbits at `radius` with inclination uniform on [0, π] and
/// node and phase uniform on [0, 2π). Draws come from a ChaCha8 stream seeded
/// with `seed`, three per satellite in the order inclination, node, phase.
pub fn generate_constellation(
    n: usize,
    radius: f64,
    seed: u64,
    earth: &EarthModel,
) -> Result<Vec<OrbitElements>> {
    if n == 0 {
        return Err(Error::InvalidConfig("constellation needs at least one satellite"));
    }
    if !(radius > earth.r_earth) {
        return Err(Error::BadRadius {
            radius,
            r_earth: earth.r_earth,
        });
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..n)
        .map(|_| OrbitElements {
            radius,
            inclination: rng.gen_range(0.0..=PI),
            raan: rng.gen_range(0.0..TAU),
            phase: rng.gen_range(0.0..TAU),
        })
        .collect())
}

/// Analytic position and velocity on the circular orbit at time `t`.
pub fn propagate_circular(el: &OrbitElements, t: f64, earth: &EarthModel) -> StateVector {
    let n = el.mean_motion(earth);
    let u = el.phase + n * t;
    let (sin_u, cos_u) = u.sin_cos();
    let (sin_i, cos_i) = el.inclination.sin_cos();
    let (sin_o, cos_o) = el.raan.sin_cos();
    // In-plane unit vectors: p toward the ascending node, q ninety degrees ahead.
    let p = Vec3::new(cos_o, sin_o, 0.0);
    let q = Vec3::new(-sin_o * cos_i, cos_o * cos_i, sin_i);
    let speed = el.radius * n;
    StateVector {
        position: (p * cos_u + q * sin_u) * el.radius,
        velocity: (q * cos_u - p * sin_u) * speed,
    }
}

pub fn two_body_acceleration(position: &Vec3, earth: &EarthModel) -> Vec3 {
    let r = position.norm();
    position * (-earth.mu / (r * r * r))
}

/// One classical fourth-order Runge–Kutta step of two-body motion.
pub fn two_body_rk4(x: &StateVector, dt: f64, earth: &EarthModel) -> Result<StateVector> {
    let radius = x.position.norm();
    if !(radius > 0.5 * earth.r_earth) {
        return Err(Error::SingularState { radius });
    }
    if dt == 0.0 {
        return Ok(*x);
    }
    let deriv = |p: &Vec3, v: &Vec3| (*v, two_body_acceleration(p, earth));
    let (k1p, k1v) = deriv(&x.position, &x.velocity);
    let (k2p, k2v) = deriv(&(x.position + k1p * (0.5 * dt)), &(x.velocity + k1v * (0.5 * dt)));
    let (k3p, k3v) = deriv(&(x.position + k2p * (0.5 * dt)), &(x.velocity + k2v * (0.5 * dt)));
    let (k4p, k4v) = deriv(&(x.position + k3p * dt), &(x.velocity + k3v * dt));
    Ok(StateVector {
        position: x.position + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (dt / 6.0),
        velocity: x.velocity + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0),
    })
}
