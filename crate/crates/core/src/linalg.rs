//! Small fixed-size matrix aliases and covariance helpers.

use nalgebra::{SMatrix, SymmetricEigen};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Vec6 = nalgebra::Vector6<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Mat6 = nalgebra::Matrix6<f64>;

/// Relative tolerance for covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Minimum eigenvalue allowed for a covariance, as a fraction of its trace.
pub const PSD_TOL: f64 = 1e-9;

/// Returns `(m + mᵀ) / 2`.
pub fn symmetrize<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric<const N: usize>(m: &SMatrix<f64, N, N>) -> bool {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    (m - m.transpose()).amax() <= SYMMETRY_TOL * scale
}

/// Covariance checks for the 3×3 and 6×6 matrices used by the filter.
pub trait CovarianceExt {
    fn min_eigenvalue(&self) -> f64;

    /// Finite, symmetric within [`SYMMETRY_TOL`], and minimum eigenvalue
    /// ≥ −[`PSD_TOL`]·trace.
    fn is_covariance(&self) -> bool;
}

macro_rules! impl_covariance {
    ($n:literal) => {
        impl CovarianceExt for SMatrix<f64, $n, $n> {
            fn min_eigenvalue(&self) -> f64 {
                SymmetricEigen::new(symmetrize(self))
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            }

            fn is_covariance(&self) -> bool {
                if !self.iter().all(|v| v.is_finite()) || !is_symmetric(self) {
                    return false;
                }
                self.min_eigenvalue() >= -PSD_TOL * self.trace().abs()
            }
        }
    };
}

impl_covariance!(3);
impl_covariance!(6);

pub fn is_covariance<M: CovarianceExt>(m: &M) -> bool {
    m.is_covariance()
}
