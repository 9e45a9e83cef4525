use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("orbit radius {radius} m does not exceed the Earth radius {r_earth} m")]
    BadRadius { radius: f64, r_earth: f64 },
    #[error("target coincides with the sensor site (range {range} m)")]
    ZeroRange { range: f64 },
    #[error("state radius {radius} m is inside the propagation guard")]
    SingularState { radius: f64 },
    #[error("innovation covariance is singular (condition number {condition:e})")]
    SingularInnovation { condition: f64 },
    #[error("covariance trace {trace} is not positive")]
    NonPositiveTrace { trace: f64 },
    #[error("step called on a finished episode")]
    SteppedAfterDone,
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("non-finite network parameters after {gradient_steps} gradient steps")]
    NonFiniteParameters { gradient_steps: u64 },
}
