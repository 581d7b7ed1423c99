//! Deterministic simulation of a stepper-motor drive train.
//!
//! The crate is layered bottom-up:
//!
//! - [`motor`]: the electromechanical plant as a derivative function,
//! - [`sim`]: fixed-step integration and trace capture,
//! - [`drive`]: the step/direction drive stage and step schedules,
//! - [`profile`]: trapezoidal, S-curve and spline trajectory planning,
//! - [`axis`]: axis configuration, homing, moves and supervision,
//! - [`export`]: CSV writers.

pub mod axis;
pub mod drive;
pub mod error;
pub mod export;
pub mod motor;
pub mod profile;
pub mod sim;

pub use error::{Error, Result};
