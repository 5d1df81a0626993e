//! Seeded, configuration-driven experiments around the DMALA detector.
//!
//! Each experiment reads an [`ExperimentConfig`], produces a [`ResultRecord`]
//! and writes CSV/JSON files plus a plotting script. Every byte written is a
//! function of the configuration and seed, whatever the worker count.

pub mod config;
pub mod csv;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod record;
pub mod stats;

pub use config::{DetectorKind, ExperimentConfig, ExperimentKind, ModeKind, SamplerSettings};
pub use error::{HarnessError, Result};
pub use experiments::{compute, run, write_outputs};
pub use record::{Metrics, ResultRecord};
