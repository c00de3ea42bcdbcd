//! Experiment orchestration: manifest loading, the `calibrate`,
//! `noise-probe`, `train`, `eval`, and `theory` subcommands, and run
//! persistence.

pub mod commands;
pub mod manifest;
pub mod ops;

pub use commands::{cmd_calibrate, cmd_eval, cmd_noise_probe, cmd_theory, cmd_train};
pub use manifest::{ExperimentManifest, LoadedManifest, Variant};
