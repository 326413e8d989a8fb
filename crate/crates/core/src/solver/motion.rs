//! Quasi-static time stepping and position scans.

use serde::{Deserialize, Serialize};

use super::{solve_flow, Discretization};
use crate::error::{Error, Result};
use crate::scenario::{RigidMotion, RobotPose, Scenario, VesselKind};

/// Step control for [`advance_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvanceOptions {
    /// Largest Euler substep, s.
    pub max_step: f64,
    /// Smallest substep before giving up, s.
    pub min_step: f64,
    /// Accepted disagreement between one full step and two half steps, µm
    /// (rotations are converted to surface displacement).
    pub tolerance: f64,
    /// For straight vessels, treat the segment as a window that travels
    /// axially with the robot, removing end effects from long runs. The
    /// returned pose then keeps its axial position in the window and the
    /// axial travel is reported in [`Advanced::displacement`].
    pub co_moving: bool,
}

impl Default for AdvanceOptions {
    fn default() -> Self {
        AdvanceOptions { max_step: 1e-3, min_step: 1e-6, tolerance: 1e-3, co_moving: false }
    }
}

fn step(pose: &RobotPose, m: &RigidMotion, dt: f64) -> RobotPose {
    RobotPose { x: pose.x + m.vx * dt, y: pose.y + m.vy * dt, psi: pose.psi + m.omega * dt }
}

fn with_pose(s: &Scenario, pose: RobotPose) -> Result<Scenario> {
    let next = Scenario { pose, ..s.clone() };
    let gap = next.min_gap()?;
    if gap <= 0.0 {
        return Err(Error::GeometryViolation(format!(
            "robot reaches the wall at ({:.4}, {:.4})",
            pose.x, pose.y
        )));
    }
    Ok(next)
}

/// Result of [`advance_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct Advanced {
    pub scenario: Scenario,
    /// Lab-frame displacement of the robot center, µm.
    pub displacement: [f64; 2],
    /// Rotation, rad.
    pub rotation: f64,
    /// Number of flow solves performed.
    pub solves: usize,
}

/// Advances the robot by `dt` seconds with default step control.
pub fn advance(scenario: &Scenario, dt: f64, disc: &Discretization) -> Result<Scenario> {
    Ok(advance_with(scenario, dt, disc, &AdvanceOptions::default())?.scenario)
}

/// Explicit Euler on the quasi-static rigid motion. Each substep is compared
/// with two half steps and halved until they agree within the tolerance; the
/// two-half-step result is kept.
pub fn advance_with(scenario: &Scenario, dt: f64, disc: &Discretization, opts: &AdvanceOptions) -> Result<Advanced> {
    advance_from(scenario, None, dt, disc, opts)
}

/// [`advance_with`] reusing an already solved motion at the starting pose.
pub fn advance_from(
    scenario: &Scenario,
    initial: Option<RigidMotion>,
    dt: f64,
    disc: &Discretization,
    opts: &AdvanceOptions,
) -> Result<Advanced> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::Config(format!("time step must be finite and non-negative, got {dt}")));
    }
    if !(opts.max_step > 0.0 && opts.min_step > 0.0 && opts.tolerance > 0.0) {
        return Err(Error::Config("step options must be positive".into()));
    }
    let scale = scenario.shape.max_extent();
    let co_moving = opts.co_moving && scenario.vessel.kind == VesselKind::Straight;
    let mut current = scenario.clone();
    let mut displacement = [0.0; 2];
    let mut solves = 0;
    let mut elapsed = 0.0;
    let mut h = opts.max_step.min(dt);
    let mut known = initial;
    while dt - elapsed > 1e-12 * dt.max(1.0) {
        h = h.min(dt - elapsed);
        let m0 = match known.take() {
            Some(m) => m,
            None => {
                solves += 1;
                solve_flow(&current, disc)?.motion
            }
        };
        loop {
            let full = step(&current.pose, &m0, h);
            let mid = with_pose(&current, step(&current.pose, &m0, h / 2.0))?;
            let m1 = solve_flow(&mid, disc)?.motion;
            solves += 1;
            let half = step(&mid.pose, &m1, h / 2.0);
            let err = (full.x - half.x).abs().max((full.y - half.y).abs()).max((full.psi - half.psi).abs() * scale);
            if err <= opts.tolerance {
                displacement[0] += half.x - current.pose.x;
                displacement[1] += half.y - current.pose.y;
                let x = if co_moving { current.pose.x } else { half.x };
                current = with_pose(&current, RobotPose { x, ..half })?;
                elapsed += h;
                if err < opts.tolerance / 4.0 {
                    h = (2.0 * h).min(opts.max_step);
                }
                break;
            }
            h /= 2.0;
            if h < opts.min_step {
                return Err(Error::StepFailure(format!("step size fell below {:e} s", opts.min_step)));
            }
        }
    }
    let rotation = current.pose.psi - scenario.pose.psi;
    Ok(Advanced { scenario: current, displacement, rotation, solves })
}

/// One row of a speed profile across the vessel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub y_c: f64,
    pub speed: Option<f64>,
    pub omega: Option<f64>,
    pub error: Option<String>,
}

/// Solves the template scenario with the robot center moved to each `y`.
/// Failed points are reported in their row and the scan continues.
pub fn speed_profile_scan(template: &Scenario, ys: &[f64], disc: &Discretization) -> Vec<ProfileRow> {
    ys.iter()
        .map(|&y| {
            let mut s = template.clone();
            s.pose.y = y;
            match s.validate().and_then(|_| solve_flow(&s, disc)) {
                Ok(sol) => ProfileRow { y_c: y, speed: Some(sol.motion.speed()), omega: Some(sol.motion.omega), error: None },
                Err(e) => ProfileRow { y_c: y, speed: None, omega: None, error: Some(e.to_string()) },
            }
        })
        .collect()
}
