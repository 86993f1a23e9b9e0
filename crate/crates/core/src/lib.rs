//! Density-matrix simulation of noisy quantum circuits with benchmarking
//! protocols, randomized compiling and an experiment harness.

pub mod benchlib;
pub mod circuit;
pub mod compile;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod protocols;
pub mod state;

pub use error::{Error, Result};
