//! Experiment driver for `probdfo-core`: configuration files, the benchmark
//! experiments, trace/path/report files and Monte-Carlo diagnostics of
//! model quality.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod report;
pub mod trace;

pub use config::{parse_config, ExperimentConfig, ExperimentId, Method};
pub use error::{HarnessError, Result};
pub use experiment::run_experiment;
pub use report::Report;
