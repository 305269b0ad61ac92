//! Monte Carlo experiments, configuration files and the self-check suite.

pub mod config;
pub mod experiment;
pub mod mc;
pub mod verify;

pub use config::{ClassEntry, ClassesFile, ConfigFile, ExperimentSpec, Scheme, SnrGrid};
pub use experiment::{run_experiment, write_results, OutputFormat, ResultRow, CSV_HEADER};
pub use verify::{verify_suite, CheckResult, VerifyReport};
