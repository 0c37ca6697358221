//! Experiment harness for the SFO simulator: TOML experiment specs,
//! Monte-Carlo sweeps, CSV tables, PNG images and SVG plots.

pub mod config;
pub mod error;
pub mod experiment;
pub mod imaging;
pub mod pipeline;
pub mod plot;
pub mod report;

pub use config::{ExperimentKind, ExperimentSpec, Preset, Processing};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ResultRow, ResultTable};
pub use report::write_outputs;
