//! Simulation and statistical verification of fractionally integrated
//! inverse stable subordinators.

pub mod analytic;
pub mod error;
pub mod lamperti;
pub mod paths;
pub mod sampling;
pub mod shotnoise;
pub mod stats;

pub use error::{FiissError, Result};
