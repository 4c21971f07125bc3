//! Exact diagonalization of a finite atom array coupled to a waveguide.
//!
//! The crate builds the waveguide-mediated Hamiltonian in the one- and
//! two-excitation sectors, diagonalizes it densely with residual certification,
//! and computes the observables used to find and characterize two-photon states
//! whose photons sit at opposite ends of the array.
//!
//! ```
//! use wqed_core::{ArrayConfig, PairSpectrum, EigOptions};
//!
//! let spectrum = PairSpectrum::solve(&ArrayConfig::new(2, 1.0), &EigOptions::default()).unwrap();
//! assert!((spectrum.energy(0).im + 1.0).abs() < 1e-14);
//! ```

// NaN-rejecting guards are written as `!(x >= 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod lattice;
pub mod matrix;
pub mod observables;
pub mod pipeline;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{ArrayConfig, PairBasis};
pub use matrix::{ComplexMatrix, C64};
pub use pipeline::{PairSpectrum, SingleSpectrum};
pub use spectral::EigOptions;
