//! Sparse code multiple access (SCMA) codebook design and link-level simulation.
//!
//! The crate is organized along the design flow:
//!
//! - [`factor_graph`]: sparse layer-to-resource mapping (`F`, `V_j`, `f_j`).
//! - [`constellation`]: multi-dimensional mother constellations built from
//!   rotated lattices, real/imaginary shuffling and projection reduction.
//! - [`codebook`]: layer operators (phase signatures) and per-layer codebooks.
//! - [`channel`]: channel realizations, noise and superposition.
//! - [`detector`]: message passing, exact MAP, projection-collapsed and split
//!   real/imaginary detection.
//! - [`simulator`]: seeded Monte Carlo error-rate sweeps and SCMA vs LDS
//!   comparisons.

pub mod channel;
pub mod codebook;
pub mod constellation;
pub mod detector;
mod error;
pub mod factor_graph;
pub mod io;
mod optimize;
pub mod simulator;

pub use error::{Result, ScmaError};
pub use num_complex::Complex64;
