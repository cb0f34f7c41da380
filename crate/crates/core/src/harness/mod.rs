//! Experiment manifests, batch runs and their output files.

pub mod experiment;
pub mod manifest;
pub mod report;

pub use experiment::{
    cell_environment, run_experiment, run_single, ExperimentResults, ManifestEcho, RunManifest, RunStatus,
    StatsRow, SummaryRow,
};
pub use manifest::{CellArity, CellKey, Comparison, ExperimentManifest, Metric, ParameterGrid};
pub use report::{attractor_sweep, robustness_scan, write_attractor_csv, write_robustness_csv};
