//! Simulation of GHZ-encoded photonic qubits: linear-optics Bell
//! measurement, logical Bell measurement and teleportation under photon
//! loss, scheme comparison curves, and Steane-code loss thresholds.

pub mod bell;
pub mod campaign;
pub mod checks;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod format;
pub mod ghz;
pub mod loss;
pub mod optics;
pub mod report;
pub mod rng;
pub mod schemes;
pub mod steane;

pub use error::{Error, Result};
