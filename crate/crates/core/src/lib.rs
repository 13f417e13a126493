//! Simulation engine for a dissipatively stabilized GKP qubit in a driven
//! superconducting resonator.
//!
//! The engine works in units where `h = e = k_B = 1`: energies are measured
//! in `h*f0` (resonator-frequency quanta), times in `1/f0`, and voltages in
//! `h*f0/e`. With these conventions `hbar = 1/(2*pi)`, so a state with
//! energy `E` acquires phase `exp(-2*pi*i*E*t)`.

pub mod bath;
pub mod drive;
pub mod error;
pub mod floquet;
pub mod grid;
pub mod linalg;
pub mod lindblad;
pub mod observables;
pub mod protocols;

pub use error::{Error, Result};

/// Phase accumulated per unit energy per unit time: `1/hbar = 2*pi` in
/// `h = 1` units.
pub const ANGULAR: f64 = std::f64::consts::TAU;
