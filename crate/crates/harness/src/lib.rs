//! Experiment runner for `slmap-core`: configuration, model presets and the
//! forward, inverse, round-trip, sweep, splitting and double-eigenvalue tasks.

pub mod config;
pub mod error;
pub mod presets;
pub mod tasks;

pub use config::{ExperimentConfig, Task};
pub use error::{HarnessError, Result};
