//! Command-line front end for the conditioned-pendulum simulator.
//!
//! The library half of the `qpend` binary: config parsing with a canonical
//! snapshot and content-addressed run id, the deterministic strobe-lockstep
//! run engine with per-strobe checkpoints, binary checkpoint encoding,
//! atomic output writing with a file manifest, and figure-table emission
//! from completed runs. Everything here is exercised directly by the
//! integration tests; `main.rs` only adds argument parsing and exit codes.

pub mod checkpoint;
pub mod config;
pub mod emit;
pub mod error;
pub mod output;
pub mod runner;
pub mod scenario;
