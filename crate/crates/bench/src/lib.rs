//! Experiment driver for the variational-circuit toolkit: config files,
//! experiment runners, result records, plots and acceptance criteria.

pub mod config;
pub mod criteria;
pub mod error;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod suite;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{BenchError, BenchResult};
