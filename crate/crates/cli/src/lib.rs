//! Experiment runner for the `dpsco` algorithms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod runner;
pub mod table;

pub use config::{ConfigError, ExperimentConfig, RawConfig};
pub use runner::{read_csv, run_experiment, CsvRow, Experiment, RunSummary, CSV_HEADER};
pub use table::{emit_rate_table, RateTable, TableRow};
