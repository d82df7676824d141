//! Batch runs: configuration, per-mesh artifacts, metric rows and their
//! aggregation.

mod config;
mod report;
mod run;

pub use config::{EvalConfig, EvalDomain, MeshEntry, RunConfig};
pub use report::{aggregate, read_metric_rows, write_metric_rows, BucketSummary, CellSummary, Report, SCHEMA_VERSION};
pub use run::{acquire, evaluate_mesh, run_batch, BatchOutcome, MeshRun, ARTIFACT_FILES};

/// Version stamped into every metrics row.
pub const PIPELINE_VERSION: &str = env!("CARGO_PKG_VERSION");
