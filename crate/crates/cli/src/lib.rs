//! Library side of the `netlms` command: run-file schema, presets and the
//! runner that writes curves, summaries and manifests.

pub mod config;
pub mod presets;
pub mod run;

pub use config::{Analysis, RunFile, StrategyEntry};
pub use presets::Preset;
pub use run::{run, Manifest, RunConfig, RunOutcome, Summary};
