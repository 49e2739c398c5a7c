//! Experiment runner, sweep driver and verification suite around
//! `igchaos-core`, plus the artifact emitters (CSV, JSON records, SVG).

pub mod config;
pub mod csvio;
pub mod error;
pub mod runner;
pub mod svg;
pub mod tolerances;
pub mod verify;

pub use config::{ConfigOverlay, ExperimentConfig};
pub use error::CliError;
pub use runner::{run_experiment, run_sweep, RunRecord, SweepOutcome};
pub use verify::{verify, VerifyOptions, VerifyReport};
