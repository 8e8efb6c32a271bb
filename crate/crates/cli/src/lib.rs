//! Scenario loading, presets, commands and deterministic export for the
//! `genusflow` binary.

// Validation uses `!(x > 0.0)` so NaN is rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod export;
pub mod presets;
pub mod report;
pub mod scenario;

pub use commands::{run, Artifact, ArtifactKind, Command, Outcome, Overrides};
pub use error::CliError;
pub use scenario::Scenario;
