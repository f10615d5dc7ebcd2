//! Decay fitting, experiment orchestration, configuration and report output.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod fit;
pub mod report;

pub use config::{parse_config, read_config, ExperimentConfig, Validate};
pub use experiment::{run_experiment, run_experiment_as, ExperimentOutcome, ExperimentReport, RunReport};
pub use fit::{classify_decay, fit_exponential, fit_polynomial, DecayClass, DecayFit, FitWindow, WindowPolicy};
pub use report::{Bundle, Format, Manifest};
