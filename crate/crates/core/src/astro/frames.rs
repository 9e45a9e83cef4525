use super::{wrap_two_pi, AerVector, EarthModel, SensorSite};
use crate::linalg::{symmetrize, Mat3, Vec3};
use crate::{Error, Result};
#[allow(unused_imports)] // inherent float methods shadow it only when std is linked
use num_traits::Float;

/// Central-difference steps for (azimuth rad, elevation rad, range m).
pub const JACOBIAN_STEPS: [f64; 3] = [1e-6, 1e-6, 1e-2];

/// Distance below which a target is considered coincident with the site.
pub const ZERO_RANGE_TOL: f64 = 1e-3;

pub fn aer_to_ned(aer: &AerVector) -> Vec3 {
    let (sin_az, cos_az) = aer.azimuth.sin_cos();
    let (sin_el, cos_el) = aer.elevation.sin_cos();
    Vec3::new(
        aer.range * cos_el * cos_az,
        aer.range * cos_el * sin_az,
        -aer.range * sin_el,
    )
}

/// Rotation taking local NED components at `site` to ECEF components.
pub fn ned_to_ecef_matrix(site: &SensorSite) -> Mat3 {
    let (sin_lat, cos_lat) = site.latitude.sin_cos();
    let (sin_lon, cos_lon) = site.longitude.sin_cos();
    Mat3::new(
        -sin_lat * cos_lon, -sin_lon, -cos_lat * cos_lon,
        -sin_lat * sin_lon, cos_lon, -cos_lat * sin_lon,
        cos_lat, 0.0, -sin_lat,
    )
}

pub fn ned_to_ecef_direction(ned: &Vec3, site: &SensorSite) -> Vec3 {
    ned_to_ecef_matrix(site) * ned
}

pub fn site_ecef_position(site: &SensorSite, earth: &EarthModel) -> Vec3 {
    let (sin_lat, cos_lat) = site.latitude.sin_cos();
    let (sin_lon, cos_lon) = site.longitude.sin_cos();
    Vec3::new(cos_lat * cos_lon, cos_lat * sin_lon, sin_lat) * earth.r_earth
}

fn earth_rotation(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn ecef_to_eci(ecef: &Vec3, t: f64, earth: &EarthModel) -> Vec3 {
    earth_rotation(earth.omega * t) * ecef
}

pub fn eci_to_ecef(eci: &Vec3, t: f64, earth: &EarthModel) -> Vec3 {
    earth_rotation(earth.omega * t).transpose() * eci
}

/// Absolute ECI position of a target seen at `aer` from `site` at time `t`.
pub fn aer_to_eci(aer: &AerVector, site: &SensorSite, t: f64, earth: &EarthModel) -> Vec3 {
    let ecef = site_ecef_position(site, earth) + ned_to_ecef_direction(&aer_to_ned(aer), site);
    ecef_to_eci(&ecef, t, earth)
}

/// Inverse of [`aer_to_eci`]. Azimuth is reported in [0, 2π) and is 0 at the
/// zenith; elevation is negative below the horizon.
pub fn eci_to_aer(eci: &Vec3, site: &SensorSite, t: f64, earth: &EarthModel) -> Result<AerVector> {
    let relative = eci_to_ecef(eci, t, earth) - site_ecef_position(site, earth);
    let range = relative.norm();
    if range <= ZERO_RANGE_TOL {
        return Err(Error::ZeroRange { range });
    }
    let ned = ned_to_ecef_matrix(site).transpose() * relative;
    let horizontal = ned.x.hypot(ned.y);
    let azimuth = if horizontal == 0.0 {
        0.0
    } else {
        wrap_two_pi(ned.y.atan2(ned.x))
    };
    Ok(AerVector {
        azimuth,
        elevation: (-ned.z).atan2(horizontal),
        range,
    })
}

/// ∂(ECI position)/∂(azimuth, elevation, range), one column per coordinate,
/// by central differences with [`JACOBIAN_STEPS`].
pub fn jacobian_aer_to_eci(aer: &AerVector, site: &SensorSite, t: f64, earth: &EarthModel) -> Mat3 {
    jacobian_with_steps(aer, site, t, earth, JACOBIAN_STEPS)
}

pub(crate) fn jacobian_with_steps(
    aer: &AerVector,
    site: &SensorSite,
    t: f64,
    earth: &EarthModel,
    steps: [f64; 3],
) -> Mat3 {
    let mut jac = Mat3::zeros();
    for (col, &h) in steps.iter().enumerate() {
        let mut plus = [aer.azimuth, aer.elevation, aer.range];
        let mut minus = plus;
        plus[col] += h;
        minus[col] -= h;
        let at = |c: [f64; 3]| aer_to_eci(&AerVector::new(c[0], c[1], c[2]), site, t, earth);
        let diff = (at(plus) - at(minus)) / (2.0 * h);
        jac.set_column(col, &diff);
    }
    jac
}

/// Maps an AER-frame noise covariance into ECI: J·P·Jᵀ, symmetrized.
pub fn transform_noise(p_aer: &Mat3, jacobian: &Mat3) -> Mat3 {
    symmetrize(&(jacobian * p_aer * jacobian.transpose()))
}
