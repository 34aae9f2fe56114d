//! Numerical laboratory for quaternionic pluripotential theory.
//!
//! * [`quat`] and [`hyperhermitian`]: quaternion arithmetic, hyperhermitian
//!   matrices and the Moore determinant.
//! * [`field`] and [`hypercomplex`]: coordinates on `H^n`, scalar fields and
//!   the pointwise quaternionic Monge-Ampere operator in any dimension.
//! * [`grid`] and [`potential`]: 4D grids on `H^1`, the discrete Laplacian
//!   (which is `4 MA` in dimension one), Dirichlet solves and the comparison
//!   checks.
//! * [`envelope`]: subharmonic envelopes by two independent solvers.
//! * [`capacity`], [`weight`] and [`energy`]: relative capacity, weights,
//!   weighted energies and the Monge-Ampere solver for energy-class measures.

pub mod capacity;
pub mod energy;
pub mod envelope;
pub mod error;
pub mod field;
pub mod grid;
pub mod hypercomplex;
pub mod hyperhermitian;
pub mod potential;
pub mod quat;
pub mod weight;

pub use error::{Error, Result};
