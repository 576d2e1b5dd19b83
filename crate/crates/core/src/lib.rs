//! Numerics for shock fluctuations in totally asymmetric exclusion with a
//! slow half-line of particles.
//!
//! The crate evaluates the limiting one-point and multi-point distributions
//! as Fredholm determinants of an Airy-type kernel, extracts moments from
//! them, and provides the two Monte Carlo models (the particle system and the
//! corresponding last-passage percolation) used to validate the limit.

pub mod dist;
mod error;
pub mod fredholm;
pub mod kernel;
pub mod lpp;
pub mod real;
pub mod selftest;
pub mod specfun;
pub mod stats;
pub mod tasep;

pub use error::{Error, Result};
pub use real::{Dd, Real};

/// Parameters above this magnitude are refused unless explicitly overridden.
pub const DEFAULT_A_MAX: f64 = 3.0;
