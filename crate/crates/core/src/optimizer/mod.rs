//! Design updates: continuation schedules, the method of moving asymptotes,
//! and the optimization loop.

pub mod mma;
pub mod run;
pub mod schedule;

pub use run::{run_optimization, volume_fraction, IterationRecord, OptimizationResult};
