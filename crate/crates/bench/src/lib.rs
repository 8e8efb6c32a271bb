//! Benchmarks for `genusflow-core` live in `benches/`. This crate only
//! re-exports the core types so the benches read like user code.

pub use genusflow_core::*;
