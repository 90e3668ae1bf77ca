//! Experiment harness for the open quantum battery simulator: run
//! configuration, CSV records, checkpoints, threaded episode generation,
//! the command implementations and SVG plotting.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod parallel;
pub mod plot;
pub mod presets;
pub mod records;

pub use error::{Error, Result};
