//! Config-driven experiment matrices: cell scheduling, persistence and
//! figures.

mod config;
pub mod output;
pub mod plots;
mod run;

pub use config::{
    parse_config, validate_config, ConfigError, DatasetEntry, Diagnostic, DiscoveryConfig, Engine, ExperimentConfig,
    TargetChoice, SCHEMA_VERSION,
};
pub use plots::{box_stats, emit_all, emit_plots, BoxStats, PlotKind};
pub use run::{
    cell_seed, diff_demo, plan_cells, run_cells, run_matrix, run_matrix_into, score_cell, CellRecord,
    CellStatus, DemoResult, MatrixResult, ReportBundle, RunManifest,
};
