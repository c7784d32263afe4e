//! Configs, stage execution, artifacts, manifests and plots.

mod artifacts;
mod commands;
mod config;
mod manifest;
mod pipeline;
pub mod svg;

pub use artifacts::{sha256_hex, ArtifactRecord, ArtifactStore};
pub use commands::{execute, load_curve, report, OutputFormat, Stage, StageRun};
pub use config::{ExperimentConfig, GridSpec, Grids, RegionGrid, Regions, StabilitySpec, SweepSpec};
pub use manifest::{replay, ReplayReport, RunManifest, Seeds, MANIFEST_FILE};
pub use pipeline::{
    fit_region, rmse_row, run_pipeline, run_sweep, with_pool, with_threads, Context, PipelineOutput, RegionFits,
    RmseRow, RmseTable, VERIFY_TOL,
};
