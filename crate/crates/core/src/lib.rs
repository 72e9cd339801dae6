//! Numerical auditing of the degenerate adiabatic approximation.
//!
//! The crate simulates explicitly time-dependent Hamiltonians with degenerate
//! spectra and evaluates whether the evolved state follows the adiabatic
//! prediction: dynamical phase times a Wilczek-Zee holonomy inside each
//! degenerate eigenspace. The pipeline is
//!
//! 1. [`models`]: a Hamiltonian source (the rotating-field Dirac-matrix model
//!    or a sampled schedule),
//! 2. [`spectral`]: snapshot eigendecomposition, degenerate level grouping,
//!    gauge fixing and the overlap blocks `<n^h|d/dt m^g>`,
//! 3. [`holonomy`]: dynamical phases, holonomies and the adiabatic state,
//! 4. [`dynamics`]: Schrödinger propagation and the closed-form reference
//!    solution of the Dirac-matrix model,
//! 5. [`conditions`]: the necessary and the practical sufficient validity
//!    tests, aggregated by [`analysis::analyze`].
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod conditions;
pub mod dynamics;
mod error;
pub mod grid;
pub mod holonomy;
pub mod linalg;
pub mod models;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use linalg::{CMatrix, C64};
pub use models::{GammaModel, GammaParams, HamiltonianModel, SampledModel};
