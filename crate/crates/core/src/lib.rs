//! Topology optimization of elastic-viscoplastic structures with phase-field
//! fracture under dynamic loading.

pub mod adjoint;
pub mod cli;
pub mod config;
pub mod constitutive;
pub mod error;
pub mod forward;
pub mod interpolation;
pub mod load;
pub mod mesh;
pub mod objective;
pub mod optimizer;
pub mod output;
pub mod problem;
pub mod sensitivity;
pub mod sparse;
pub mod tensor;

pub use error::{Error, Result};
