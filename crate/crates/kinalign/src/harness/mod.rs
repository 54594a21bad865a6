//! Experiment orchestration: configuration, dispatch, comparisons,
//! convergence-order estimation and emission.

pub mod acceptance;
pub mod compare;
pub mod config;
pub mod emit;
pub mod run;
pub mod series;

pub use compare::{bl_distance, compare_l1, convergence_order, l1_distance, SnapshotSeries};
pub use config::{load_config, load_config_str, ExperimentConfig, Mixture, ModelKind, ValidatedConfig};
pub use emit::{emit, emit_csv, emit_json, parse_csv};
pub use run::{run_experiment, RunOutput};
pub use series::RunSeries;
