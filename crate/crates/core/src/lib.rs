//! Driven two-qubit open quantum battery with a structured reservoir, and a
//! recurrent actor-critic controller that learns time-dependent coupling and
//! drive amplitudes.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature; enable `libm` in that case for floating-point transcendentals.
//!
//! Units: ω₀ = ħ = k_B = 1. Times are in 1/ω₀.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bath;
pub mod ddpg;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod neural;
pub mod state;
pub mod thermo;

pub use bath::{BathSpec, RateSample};
pub use dynamics::Propagator;
pub use env::{ControlSignal, EnvConfig, EnvParams, Environment, Observation, StepResult};
pub use error::{Error, Result};
pub use state::{DensityMatrix, OperatorSet};
pub use thermo::WorkRecord;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

pub(crate) mod prelude {
    #[allow(unused_imports)]
    pub(crate) use num_traits::Float;

    pub(crate) use crate::C64;
}
