//! Experiment harness: reproducible runs of the enclosure, baseline
//! comparison, shape-estimation, and timing experiments, with CSV/JSON
//! emission for plotting.

pub mod bench;
pub mod config;
pub mod experiments;
pub mod plot;
pub mod scan;

pub use config::{CliError, ExperimentConfig};
