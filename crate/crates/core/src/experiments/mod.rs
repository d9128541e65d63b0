//! Reproducible experiment drivers behind the command-line interface.

pub mod config;
pub mod crn_validation;
pub mod hist;
pub mod sweep;

pub use config::{grid, Axis, Config, ScenarioOverrides, Spacing, SweepConfig, SweepSpec, PRESETS};
pub use crn_validation::{
    network_output, run_crn_validation, ssa_versus_ode, CrnDetectorReport, CrnValidationOptions, CrnValidationReport,
    SsaOdeCheck,
};
pub use hist::{emit_histograms, HistogramReport, StatisticHistogram};
pub use sweep::{evaluate_point, run_sweep, run_sweep_to_files, write_csv, write_json, DetectorPoint, SweepRow, SCHEMA_VERSION};
