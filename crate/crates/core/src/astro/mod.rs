//! Earth model, circular orbits, and the AER → NED → ECEF → ECI frame chain.
//!
//! Frames are self-contained: ECI and ECEF coincide at simulation time zero
//! and ECEF rotates about the common z-axis at the Earth rotation rate. The
//! Earth is a sphere and the sensor sits on its surface.

mod frames;
mod orbit;

pub use frames::{
    aer_to_eci, aer_to_ned, ecef_to_eci, eci_to_aer, eci_to_ecef, jacobian_aer_to_eci,
    ned_to_ecef_direction, ned_to_ecef_matrix, site_ecef_position, transform_noise,
    JACOBIAN_STEPS, ZERO_RANGE_TOL,
};
pub use orbit::{generate_constellation, propagate_circular, two_body_acceleration, two_body_rk4};

use crate::linalg::{Vec3, Vec6};
use crate::{Error, Result};
use core::f64::consts::{FRAC_PI_2, PI, TAU};

/// Gravitational parameter, rotation rate, and radius of a spherical Earth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarthModel {
    /// m³/s²
    pub mu: f64,
    /// rad/s
    pub omega: f64,
    /// m
    pub r_earth: f64,
}

impl EarthModel {
    pub const fn wgs84_sphere() -> Self {
        Self {
            mu: 3.986004418e14,
            omega: 7.2921159e-5,
            r_earth: 6.371e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.mu) || !positive(self.omega) || !positive(self.r_earth) {
            return Err(Error::InvalidConfig("earth model parameters must be positive"));
        }
        Ok(())
    }
}

impl Default for EarthModel {
    fn default() -> Self {
        Self::wgs84_sphere()
    }
}

/// Azimuth (from north towards east), elevation above the horizon, and range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AerVector {
    pub azimuth: f64,
    pub elevation: f64,
    pub range: f64,
}

impl AerVector {
    pub fn new(azimuth: f64, elevation: f64, range: f64) -> Self {
        Self {
            azimuth,
            elevation,
            range,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.azimuth.is_finite()
            && self.elevation.is_finite()
            && self.range.is_finite()
            && (0.0..TAU).contains(&self.azimuth)
            && (-FRAC_PI_2..=FRAC_PI_2).contains(&self.elevation)
            && self.range >= 0.0
    }
}

/// Geocentric latitude and longitude of the sensor on the spherical Earth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSite {
    pub latitude: f64,
    pub longitude: f64,
}

impl SensorSite {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self> {
        let site = Self {
            latitude,
            longitude,
        };
        site.validate()?;
        Ok(site)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&self.latitude) {
            return Err(Error::InvalidConfig("site latitude must lie in [-pi/2, pi/2]"));
        }
        if !(-PI..PI).contains(&self.longitude) {
            return Err(Error::InvalidConfig("site longitude must lie in [-pi, pi)"));
        }
        Ok(())
    }
}

/// ECI position (m) and velocity (m/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl StateVector {
    pub fn new(position: Vec3, velocity: Vec3) -> Self {
        Self { position, velocity }
    }

    pub fn from_vector(v: &Vec6) -> Self {
        Self {
            position: v.fixed_rows::<3>(0).into_owned(),
            velocity: v.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn to_vector(&self) -> Vec6 {
        let p = &self.position;
        let v = &self.velocity;
        Vec6::new(p.x, p.y, p.z, v.x, v.y, v.z)
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|c| c.is_finite())
    }

    /// Specific orbital energy v²/2 − μ/r.
    pub fn specific_energy(&self, earth: &EarthModel) -> f64 {
        0.5 * self.velocity.norm_squared() - earth.mu / self.position.norm()
    }
}

/// Circular orbit: radius, orientation of the orbital plane, and the argument
/// of latitude at the simulation epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitElements {
    pub radius: f64,
    pub inclination: f64,
    pub raan: f64,
    pub phase: f64,
}

impl OrbitElements {
    pub fn validate(&self, earth: &EarthModel) -> Result<()> {
        if !(self.radius > earth.r_earth) {
            return Err(Error::BadRadius {
                radius: self.radius,
                r_earth: earth.r_earth,
            });
        }
        if !(0.0..=PI).contains(&self.inclination)
            || !(0.0..TAU).contains(&self.raan)
            || !(0.0..TAU).contains(&self.phase)
        {
            return Err(Error::InvalidConfig("orbit angles out of range"));
        }
        Ok(())
    }

    /// Mean motion sqrt(μ/r³) in rad/s.
    pub fn mean_motion(&self, earth: &EarthModel) -> f64 {
        #[allow(unused_imports)] // inherent float methods shadow it only when std is linked
        use num_traits::Float;
        (earth.mu / (self.radius * self.radius * self.radius)).sqrt()
    }

    pub fn period(&self, earth: &EarthModel) -> f64 {
        TAU / self.mean_motion(earth)
    }
}

/// Wraps an angle into [0, 2π).
pub fn wrap_two_pi(angle: f64) -> f64 {
    let rem = angle % TAU;
    let wrapped = if rem < 0.0 { rem + TAU } else { rem };
    // Tiny negative inputs round up to exactly 2π.
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Wraps an angle into [−π, π].
pub fn wrap_pi(angle: f64) -> f64 {
    let wrapped = wrap_two_pi(angle + PI) - PI;
    if wrapped < -PI {
        wrapped + TAU
    } else {
        wrapped
    }
}
