//! Pipeline runner: configuration, stage orchestration with manifests, the
//! final report, and a few file-level tools.

pub mod config;
pub mod demo;
pub mod error;
pub mod report;
pub mod stages;
pub mod tools;

pub use config::PipelineConfig;
pub use error::{CliError, CliResult};
pub use stages::{Pipeline, Stage, StageOutcome};
