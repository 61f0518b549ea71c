//! Desk-scale simulations of non-Hermitian lattices whose eigenstates are
//! gaussian bound states with energy-locked centers.
//!
//! The crate is organized by engine:
//!
//! * [`lattice`] builds the finite lattice Hamiltonians (2D nonreciprocal,
//!   1D nonreciprocal, 1D gain/loss) as dense complex matrices.
//! * [`analytics`] carries the closed-form mode machinery: continuum
//!   solutions, lattice envelope ansatze, energy bounds, and
//!   finite-difference residual checks.
//! * [`spectral`] is a dense complex non-symmetric eigensolver with
//!   per-state statistics (participation ratio, position expectations).
//! * [`response`] computes steady-state driven response via resolvent
//!   solves, frequency sweeps, and trapping/funneling metrics.
//! * [`dynamics`] evolves wavepackets: closed-form continuum evolution and
//!   an independent RK4 integrator.
//! * [`scenario`] and [`output`] back the `clm` command-line tool.

pub mod analytics;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod lattice;
pub mod linalg;
pub mod output;
pub mod response;
pub mod rng;
pub mod scenario;
pub mod spectral;

pub use error::{CoreError, Result};
pub use linalg::{CMatrix, C64};
