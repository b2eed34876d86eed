//! Effective-picture engine for trapped Rydberg ions whose Rydberg levels are
//! coupled by the radio-frequency quadrupole field of the trap.
//!
//! The drive `2v cos(wt)` is removed by a periodic frame change; what remains
//! is a time-independent effective Hamiltonian with rescaled Rabi frequencies,
//! Stark-shifted detunings and, for two ions, a rescaled exchange plus a
//! residual coupling. [`experiments`] compares exact, effective and
//! rotating-wave dynamics for the preset scenarios.

pub mod dynamics;
pub mod effective;
pub mod error;
pub mod experiments;
pub mod hilbert;
mod integrator;
pub mod models;

pub use error::{Error, Result};

/// Version string recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
