//! IO, pipeline and command-line layer over `copdep-core`.
//!
//! Stages write CSV (6 significant digits) for plotting and JSON (full
//! precision) for downstream stages; `run_pipeline` executes them all and
//! records a hashed manifest.

pub mod config;
pub mod error;
pub mod format;
pub mod ingest;
pub mod parallel;
pub mod pipeline;
pub mod stages;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use pipeline::{run_pipeline, Manifest, RunOutcome};
pub use stages::Workspace;
