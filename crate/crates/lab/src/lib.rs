//! Experiment runner for the `freebound` crate: configuration files,
//! the FBGF grid format, CSV/JSON artifacts and the `fblab` pipelines.

pub mod config;
pub mod error;
pub mod expr;
pub mod fbgf;
pub mod output;
pub mod pipeline;
pub mod scenario;

pub use config::{ExperimentConfig, Kind, Prepared};
pub use error::{LabError, Result};
