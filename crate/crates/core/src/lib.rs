//! Noisy parametric-circuit workbench.
//!
//! - [`qsim`]: circuits, Kraus noise and a dense density-matrix simulator.
//! - [`ising`]: the n = 4 transverse-field Ising benchmark and its oracles.
//! - [`randomize`]: seeded ensembles of randomized circuits.
//! - [`mitigate`]: constrained regression over randomized curves, the affine
//!   baseline and linear zero-noise extrapolation.
//! - [`chebx`]: Chebyshev least squares, extrapolation and stability bounds.
//! - [`harness`]: configs, end-to-end pipelines, artifacts and plots.

pub mod chebx;
pub mod harness;
pub mod error;
pub mod ising;
pub mod mitigate;
pub mod qsim;
pub mod randomize;

pub use error::{Error, Result};
