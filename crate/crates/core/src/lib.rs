//! Simulation toolkit for large linear ion crystals stabilised by optical
//! tweezers: equilibrium structure in a flat-bottom "bookend" trap,
//! motional mode spectra with tweezer pinning, segmented-pulse two-qubit
//! gate design with a thermal error budget, and deterministic
//! covariance-level sympathetic-cooling dynamics.
//!
//! All physics runs in dimensionless units built from the adjacent-ion
//! exchange frequency ω₀ and the target spacing d₀; see [`units`].

pub mod constants;
pub mod cooling;
pub mod crystal;
pub mod error;
pub mod fitting;
pub mod gate;
pub mod linalg;
pub mod modes;
pub mod oscint;
pub mod potential;
pub mod scenario;
pub mod units;

pub use error::{Error, Result};
pub use units::{derive_units, doppler_temperature, Axis, TrapConfig, TweezerLayout, UnitSystem};
