//! Coherent Ising machine simulator built on a network of degenerate
//! optical parametric oscillators.

pub mod error;
pub mod experiments;
pub mod graph;
pub mod quantum;
pub mod readout;
pub mod sde;

pub use error::{CimError, Result};
