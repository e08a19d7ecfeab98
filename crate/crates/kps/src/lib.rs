//! Shard-parallel execution, file formats and orchestration around
//! `kps-core`.
//!
//! The core crate is pure algorithm; this crate adds everything that needs
//! an operating system: a worker-pool [`engine`] honoring the deterministic
//! map/reduce contract, checkpointing, the text instance format, trace and
//! solution outputs, and the `kps` command line.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod engine;
pub mod format;
pub mod outputs;
pub mod run;

pub use engine::{map_reduce, EngineError, ParallelExecutor, ShardPlan};
