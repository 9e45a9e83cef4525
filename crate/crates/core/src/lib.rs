//! Sensor management for space situational awareness.
//!
//! A ground telescope steered by a double deep Q-network tries to keep as
//! many low Earth orbit satellites in its field of view as possible, while an
//! extended Kalman filter tracks every satellite from whatever detections the
//! pointing policy produces.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration, and
//! the command line live in the `ssa-harness` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod astro;
pub mod ddqn;
pub mod env;
mod error;
pub mod linalg;
pub mod rng;
pub mod sensor;
pub mod tracking;

pub use crate::error::{Error, Result};
