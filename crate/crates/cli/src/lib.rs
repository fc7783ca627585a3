//! Stages, run manifests and output writers behind the `namescale` executable.

mod error;
pub mod manifest;
pub mod output;
pub mod stages;
pub mod svg;

pub use error::CliError;
pub use manifest::{run, RunManifest};
pub use output::{Provenance, OUT_DIR_ENV};
