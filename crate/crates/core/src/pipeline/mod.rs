//! Command orchestration behind the `hategraph` binary.
//!
//! Every command reads a [`PipelineConfig`], writes its artifacts into the
//! configured output directory and finishes with `manifest.json`, which
//! records the config, the derived seeds and SHA-256 hashes of every input and
//! output. Nothing in a manifest depends on wall-clock time, so identical
//! configs produce identical bytes.

pub mod config;
pub mod data;
mod manifest;
mod models;
mod run;

pub use config::{
    DataFiles, DataSource, FeatureConfig, FeatureSource, FoldSettings, GnnSettings, NodeEmbedSettings,
    PipelineConfig, PosthocSettings, MODEL_NAMES,
};
pub use data::{build_features, Dataset, FeatureModel};
pub use manifest::{sha256_file, FileHash, Manifest, MANIFEST_FILE};
pub use models::ModelSpec;
pub use run::{run, Command};
