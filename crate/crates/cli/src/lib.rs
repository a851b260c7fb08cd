//! Scenario runner, law checker and confluence fuzzer built on `edgeflow-core`.

pub mod cli;
pub mod config;
pub mod fuzz;
pub mod laws;
pub mod scenario;
