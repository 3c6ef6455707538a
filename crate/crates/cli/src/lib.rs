//! Command-line front end for the fading-MAC experiment library.
//!
//! Split from the binary so integration tests can drive the same code paths
//! the `fademac` executable uses: [`config::parse_config`] resolves a TOML
//! file (or pure defaults) into a validated configuration,
//! [`registry::run_experiment`] executes a named experiment into an output
//! directory, and [`registry::rerun_from_manifest`] re-executes a recorded
//! run and verifies it byte for byte.

pub mod config;
pub mod manifest;
pub mod registry;

pub use config::{parse_config, ExperimentSettings, Resolved};
pub use manifest::{emit_csv, OutputRecord, RunManifest};
pub use registry::{rerun_from_manifest, run_experiment, EXPERIMENTS};
