//! Numerical core for the link representation of entanglement entropies.
//!
//! A pure state of `N` parties has `2^(N-1) - 1` inequivalent bipartitions.
//! This crate computes their entropies (dense states, Gaussian fermionic
//! states, uniform matrix product states), fits a symmetric matrix of
//! nonnegative "link strengths" `J_ij` so that
//!
//! ```text
//! S_A ~ sum_{i in A, j not in A} J_ij
//! ```
//!
//! and provides the diagnostics built on top of it (error metrics, mutual
//! information, contours, block second differences, analytic MPS formulas).
//!
//! The crate is `no_std` and only needs `alloc`. Sites are numbered `1..=N`
//! in every public interface; in bitmasks site `i` is bit `i - 1`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod freefermion;
pub mod linalg;
pub mod linkfit;
pub mod mps;
pub mod partitions;
pub mod rng;
pub mod spinmodels;
pub mod statecore;

pub use error::{Error, Result};

pub use linkfit::{ErrorReport, LinkMatrix, NormalSystem};
pub use partitions::Bipartition;
pub use statecore::{EntropyData, EntropyOracle, PureState};


pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Boundary condition of a one-dimensional chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Open,
    Periodic,
}

/// Convert an entropy in nats to bits. Only used for display.
pub fn nats_to_bits(x: f64) -> f64 {
    x / core::f64::consts::LN_2
}
