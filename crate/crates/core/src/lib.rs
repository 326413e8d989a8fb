//! Stress-based navigation for microscopic robots carried by viscous flow in
//! small vessels.
//!
//! The crate contains a 2D Stokes solver that produces surface-stress
//! readings, Fourier feature extraction, trained estimators for the robot's
//! geometry and motion relative to the vessel, the training pipeline that
//! fits them, and a thermal-noise model for the stress sensors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod features;
pub mod noise;
pub mod physics;
pub mod scenario;
pub mod solver;
pub mod training;

mod optimize;

pub use error::{Error, Result};
