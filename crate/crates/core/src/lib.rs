//! Numerics for the fractional p-Laplacian with a singular, weighted
//! reaction term on an interval: regime classification, barrier calculus,
//! regularized solves with epsilon-continuation, and boundary analysis.

pub mod analysis;
pub mod barrier;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod params;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
