use core::fmt::Debug;
use core::iter::Sum;
use num_traits::Float;
use nalgebra::{ClosedAddAssign, ClosedMulAssign};
use rand::distributions::uniform::SampleUniform;

/// Floating-point type of network parameters. Training runs in `f32`;
/// gradient checks use `f64`.
pub trait Scalar:
    Float + Default + Debug + Sum + SampleUniform + nalgebra::Scalar + ClosedAddAssign + ClosedMulAssign + Send + Sync
{
    /// Tag stored in checkpoints.
    const NAME: &'static str;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(self) -> f64 {
        self
    }
}
