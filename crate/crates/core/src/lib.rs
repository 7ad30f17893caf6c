//! Probabilistic indoor localization from time-of-arrival and
//! angle-of-arrival measurements.
//!
//! The crate models ranges with per-locator Gaussian-mixture bias plus
//! receiver noise and directions with von Mises-Fisher errors, fuses the
//! two into a joint log-likelihood, and estimates positions with a
//! multistart bound-constrained solver. A simulation layer synthesizes
//! measurement epochs for configurable scenes, and a Monte-Carlo harness
//! turns trials into error statistics, CDFs, and synchronization-error
//! sweeps. The `locfuse` binary exposes the whole pipeline on the command
//! line.

pub mod aoa;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod joint;
pub mod probability;
pub mod sim;
mod solver;
pub mod toa;

pub use error::{Error, Result};
