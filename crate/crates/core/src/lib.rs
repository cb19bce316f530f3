//! Many-interacting-worlds configurations and their distance to the
//! densities `b(x) phi(x)` they approximate.
//!
//! The pipeline is: pick a [`targets::Baseline`], solve the world recursion
//! with [`solver::solve_configuration`], then measure energies, zero-bias
//! couplings, Stein bounds and Wasserstein/Kolmogorov distances.

// `!(a > b)` is used on purpose so that NaN lands on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod export;
pub mod metrics;
pub mod numerics;
pub mod poly;
pub mod solver;
pub mod stein;
pub mod targets;
pub mod zerobias;

pub use error::{Error, Result};
