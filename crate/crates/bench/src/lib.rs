//! Benchmark and validation harness for the ARS / CARS samplers: replicated
//! runs over a grid of sample sizes and node counts, node-budget sweeps,
//! envelope traces and an invariant self-check.

pub mod config;
mod error;
pub mod experiment;
pub mod trace;
pub mod validate;

pub use config::{CellKey, ExperimentConfig, MethodSel, TargetSpec};
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, sweep_nodes, BenchRow, CSV_HEADER};
pub use trace::{trace_run, TraceSnapshot};
