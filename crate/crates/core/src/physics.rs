//! Dimensionless numbers and the geometric relations shared by the solver and
//! the estimators.
//!
//! Lengths handed to the dimensionless-number functions are in SI units (m,
//! m/s, m²/s); everything else in the crate works in micrometers.

use crate::error::{Error, Result};

/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Micrometers per meter.
pub const MICRONS_PER_METER: f64 = 1e6;

/// Normalized distance of the robot center from the vessel axis: 0 at the
/// axis, 1 when the robot touches the wall.
pub fn relative_position(y_c: f64, diameter: f64, radius: f64) -> Result<f64> {
    let room = diameter / 2.0 - radius;
    if !(room > 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "robot radius {radius} does not fit in vessel of diameter {diameter}"
        )));
    }
    let rel = y_c.abs() / room;
    // allow a hair of roundoff at the touching limit
    if rel > 1.0 + 1e-12 {
        return Err(Error::InvalidGeometry(format!(
            "center offset {y_c} exceeds d/2 - r = {room}"
        )));
    }
    Ok(rel.min(1.0))
}

/// Reynolds number `u d / ν`.
pub fn reynolds(speed: f64, diameter: f64, kinematic_viscosity: f64) -> f64 {
    speed.abs() * diameter / kinematic_viscosity
}

/// Womersley number `r / sqrt(ν t)` for geometry changing over time `t`.
pub fn womersley(radius: f64, kinematic_viscosity: f64, time: f64) -> f64 {
    radius / (kinematic_viscosity * time).sqrt()
}

/// Translational diffusion coefficient of a sphere, m²/s.
pub fn diffusion_coefficient(radius: f64, temperature: f64, viscosity: f64) -> f64 {
    BOLTZMANN * temperature / (6.0 * std::f64::consts::PI * viscosity * radius)
}

/// Rotational diffusion coefficient of a sphere, rad²/s.
pub fn rotational_diffusion(radius: f64, temperature: f64, viscosity: f64) -> f64 {
    BOLTZMANN * temperature / (8.0 * std::f64::consts::PI * viscosity * radius.powi(3))
}

/// Peclet number `v r / D`.
pub fn peclet(speed: f64, radius: f64, diffusion: f64) -> f64 {
    speed * radius / diffusion
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = theta.rem_euclid(tau);
    if w >= tau {
        0.0
    } else {
        w
    }
}

/// Signed smallest difference `a - b`, in `[-π, π)`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let pi = std::f64::consts::PI;
    (a - b + pi).rem_euclid(std::f64::consts::TAU) - pi
}
