//! Numerical core for stationary Bogoliubov-de Gennes states on a magnetic
//! lattice cell.
//!
//! The crate is `no_std` and needs only `alloc`. Dense linear algebra is done
//! with `faer`; elementary functions come from `libm`.
//!
//! Layout follows the computation:
//! - [`geometry`]: lattices, quantized fields, cocycles, Chern numbers.
//! - [`space`]: the grid, magnetic Laplacian, functional calculus, densities.
//! - [`field`]: cell-periodic vector fields and the transverse Ampère solve.
//! - [`potential`]: pair potentials sampled on grid differences.
//! - [`state`]: BdG states, the effective Hamiltonian, energy and entropy.
//! - [`normal`]: the magnetically translation invariant normal state.
//! - [`stability`]: the pairing Hessian, Birman-Schwinger check, `T_c`.
//! - [`vortex`]: the self-consistent vortex-lattice solver.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![warn(missing_docs)]

extern crate alloc;

mod error;
pub mod field;
pub mod geometry;
pub mod normal;
pub mod potential;
pub mod space;
pub mod stability;
pub mod state;
pub mod vortex;

pub use error::{Error, Result};
pub use faer::c64;

/// Dense complex matrix used for every operator on the grid.
pub type CMat = faer::Mat<c64>;
