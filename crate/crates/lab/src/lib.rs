//! Experiment harness for the ITKM dictionary-identification lab: seeded
//! recovery experiments, CSV and SVG output, and the `bounds` and `probe`
//! utilities behind the `itkm-lab` binary.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod svg;
pub mod table;
pub mod tools;

pub use config::{Curve, Experiment, ExperimentConfig, Profile};
pub use error::{LabError, Result};
pub use harness::{run_fig1a, run_fig1b, run_fig2a, run_fig2b, Aggregate, TrialResult};
