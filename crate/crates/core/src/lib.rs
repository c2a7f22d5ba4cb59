//! Numerical laboratory for quantum state merging: random-measurement merging,
//! typical subspaces, multiparty rate regions and entanglement of assistance.

pub mod entropy;
pub mod error;
pub mod harness;
pub mod merge;
pub mod presets;
pub mod qlin;
pub mod regions;
pub mod rng;
pub mod typ;

pub use error::{Error, Result};
