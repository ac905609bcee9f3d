//! Benchmark harness for the spsnmf clustering toolkit: CSV ingestion,
//! repeated seeded trials, and machine-readable reports.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod report;

pub use dataset::{load_csv_dataset, LabelSelector};
pub use error::{CliError, Result};
pub use experiment::{
    emit_traces, run_experiment, run_experiment_on, run_fraction_sweep, summary_csv,
    write_similarity_csv, ExperimentSpec, ModeAggregate, TrialMetrics, TrialRecord, TrialReport,
};
