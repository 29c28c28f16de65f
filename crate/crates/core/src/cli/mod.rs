//! Experiment runner behind the `anosov-lab` binary: versioned JSON
//! configs, dispatch to the library modules, CSV/JSON reports with a run
//! manifest, and SVG plots.

pub mod config;
pub mod plot;
pub mod run;

pub use config::{
    validate_config, validate_config_str, validate_config_value, ConfigError, ExperimentConfig, ExperimentKind, KindParams, SystemSpec, SCHEMA_VERSION,
};
pub use plot::{emit_plots, PlotKind};
pub use run::{config_hash, run_experiment, Check, RunManifest, MANIFEST_NAME, TOOL_VERSION};
