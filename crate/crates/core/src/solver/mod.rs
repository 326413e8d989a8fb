//! Steady 2D Stokes flow in a vessel segment carrying a force- and
//! torque-free rigid robot.
//!
//! The flow is represented as a single-layer (Stokeslet) potential over the
//! vessel outline and the robot surface, discretized into straight panels
//! with constant force density and collocated at panel midpoints. The robot's
//! velocity and angular velocity are extra unknowns closed by zero net force
//! and zero net torque. Inside the robot the potential reproduces the rigid
//! motion with a constant pressure, so the fluid traction on the robot is the
//! negated density plus a normal constant; the constant is fixed by the
//! zero-pressure condition at the outlet.
//!
//! The single-layer operator on a closed curve annihilates the normal field,
//! so each closed curve gets a Lagrange multiplier and a zero-normal-flux
//! constraint on its density.

mod kernel;
mod mesh;
mod motion;
mod traction;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{FluidProperties, RigidMotion, RobotPose, RobotShape, Scenario, Vec2, VesselGeometry};
use kernel::PanelFrame;
use mesh::{Mesh, Part, RobotGeometry};

pub use motion::{advance, advance_from, advance_with, speed_profile_scan, AdvanceOptions, Advanced, ProfileRow};
pub use traction::{gauge_normalize, surface_traction, SensorArray, StressReading};

/// Boundary discretization and solve settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    /// Panels on the robot surface (raised automatically for small gaps).
    pub robot_panels: usize,
    /// Upper bound on the automatic robot panel refinement.
    pub max_robot_panels: usize,
    /// Wall panel size next to the robot, µm (capped at half the gap).
    pub near_size: f64,
    /// Wall panel size far from the robot, µm.
    pub far_size: f64,
    /// Growth of wall panel size per µm of distance from the robot.
    pub grading: f64,
    /// Minimum panel count across the inlet and across the outlet.
    pub end_panels: usize,
    /// Relative residual above which the linear solve is rejected.
    pub solve_tolerance: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            robot_panels: 240,
            max_robot_panels: 4096,
            near_size: 0.1,
            far_size: 0.5,
            grading: 0.25,
            end_panels: 16,
            solve_tolerance: 1e-8,
        }
    }
}

impl Discretization {
    /// Scales every size down (and the robot count up) by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        Discretization {
            robot_panels: (self.robot_panels as f64 * factor).round() as usize,
            near_size: self.near_size / factor,
            far_size: self.far_size / factor,
            grading: self.grading / factor,
            end_panels: (self.end_panels as f64 * factor).round() as usize,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.robot_panels < 16 || self.end_panels < 8 {
            return Err(Error::Config("need at least 16 robot panels and 8 end panels".into()));
        }
        if !(self.near_size > 0.0 && self.far_size >= self.near_size && self.grading > 0.0) {
            return Err(Error::Config("panel sizes must be positive with far >= near".into()));
        }
        Ok(())
    }
}

/// Single-layer representation of a solved flow; evaluates velocity and
/// pressure anywhere inside the fluid.
#[derive(Clone, Debug)]
pub struct FlowField {
    mesh: Mesh,
    density: Vec<Vec2>,
    viscosity: f64,
    ln_scale: f64,
    pressure_offset: f64,
}

impl FlowField {
    /// Fluid velocity (µm/s) at an interior point.
    pub fn velocity(&self, p: Vec2) -> Vec2 {
        let mut u = Vec2::zeros();
        for (panel, f) in self.mesh.panels.iter().zip(&self.density) {
            let m = PanelFrame::new(p, panel.mid, panel.tangent, panel.length).stokeslet(self.viscosity, self.ln_scale);
            u.x += m[0][0] * f.x + m[0][1] * f.y;
            u.y += m[1][0] * f.x + m[1][1] * f.y;
        }
        u
    }

    /// Pressure (Pa) relative to the outlet reference.
    pub fn pressure(&self, p: Vec2) -> f64 {
        self.raw_pressure(p) + self.pressure_offset
    }

    fn raw_pressure(&self, p: Vec2) -> f64 {
        self.mesh
            .panels
            .iter()
            .zip(&self.density)
            .map(|(panel, f)| PanelFrame::new(p, panel.mid, panel.tangent, panel.length).pressure().dot(f))
            .sum()
    }

    pub fn panel_count(&self) -> usize {
        self.mesh.panels.len()
    }
}

/// Traction on the robot surface at one panel.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TractionSample {
    /// Body-frame polar angle from the robot front.
    pub theta: f64,
    /// Lab-frame traction vector, Pa.
    pub tx: f64,
    pub ty: f64,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// Net hydrodynamic force per unit depth, N/m.
    pub net_force: f64,
    /// Net hydrodynamic torque per unit depth, N.
    pub net_torque: f64,
    /// |F| / (η u).
    pub relative_force: f64,
    /// |T| / (η u r).
    pub relative_torque: f64,
    /// ‖A x − b‖ / ‖b‖ of the collocation system.
    pub linear_residual: f64,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct SolveTimings {
    pub mesh_s: f64,
    pub assembly_s: f64,
    pub factorization_s: f64,
    pub postprocess_s: f64,
}

#[derive(Clone, Debug)]
pub struct FlowSolution {
    pub motion: RigidMotion,
    pub pose: RobotPose,
    pub shape: RobotShape,
    /// Dense angular sampling of the traction, ordered by panel.
    pub traction: Vec<TractionSample>,
    pub residuals: Residuals,
    pub timings: SolveTimings,
    pub field: FlowField,
}

impl FlowSolution {
    pub fn robot_panel_count(&self) -> usize {
        self.traction.len()
    }
}

struct System {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    ln_scale: f64,
}

/// Assembles the collocation system. Unknown layout: panel densities
/// (x, y interleaved), then `[λ_outer, U_x, U_y, Ω, λ_robot]` (the last four
/// only with a robot).
fn assemble(mesh: &Mesh, viscosity: f64, center: Option<Vec2>) -> System {
    let np = mesh.panels.len();
    let extra = if center.is_some() { 5 } else { 1 };
    let dim = 2 * np + extra;
    let ln_scale = (10.0 * mesh.extent).ln();
    let mut matrix = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);

    for (i, target) in mesh.panels.iter().enumerate() {
        for (j, src) in mesh.panels.iter().enumerate() {
            let m = PanelFrame::new(target.mid, src.mid, src.tangent, src.length).stokeslet(viscosity, ln_scale);
            matrix[(2 * i, 2 * j)] = m[0][0];
            matrix[(2 * i, 2 * j + 1)] = m[0][1];
            matrix[(2 * i + 1, 2 * j)] = m[1][0];
            matrix[(2 * i + 1, 2 * j + 1)] = m[1][1];
        }
    }

    let lam_outer = 2 * np;
    for (i, p) in mesh.panels[..mesh.outer].iter().enumerate() {
        matrix[(2 * i, lam_outer)] = p.normal.x;
        matrix[(2 * i + 1, lam_outer)] = p.normal.y;
        rhs[2 * i] = p.velocity.x;
        rhs[2 * i + 1] = p.velocity.y;
        matrix[(lam_outer, 2 * i)] = p.normal.x * p.length;
        matrix[(lam_outer, 2 * i + 1)] = p.normal.y * p.length;
    }

    if let Some(c) = center {
        let (ux, uy, om, lam) = (2 * np + 1, 2 * np + 2, 2 * np + 3, 2 * np + 4);
        for i in mesh.outer..np {
            let p = &mesh.panels[i];
            let rel = p.mid - c;
            // S f − U − Ω ẑ×(x − c) + λ n = 0
            matrix[(2 * i, ux)] = -1.0;
            matrix[(2 * i + 1, uy)] = -1.0;
            matrix[(2 * i, om)] = rel.y;
            matrix[(2 * i + 1, om)] = -rel.x;
            matrix[(2 * i, lam)] = p.normal.x;
            matrix[(2 * i + 1, lam)] = p.normal.y;
            // zero net force, zero net torque, zero normal flux of density
            matrix[(ux, 2 * i)] = p.length;
            matrix[(uy, 2 * i + 1)] = p.length;
            matrix[(om, 2 * i)] = -rel.y * p.length;
            matrix[(om, 2 * i + 1)] = rel.x * p.length;
            matrix[(lam, 2 * i)] = p.normal.x * p.length;
            matrix[(lam, 2 * i + 1)] = p.normal.y * p.length;
        }
    }
    System { matrix, rhs, ln_scale }
}

fn linear_solve(system: &System) -> Result<(DVector<f64>, f64)> {
    let lu = system.matrix.clone().lu();
    let x = lu.solve(&system.rhs).ok_or_else(|| {
        Error::ResolutionFailure("singular collocation system; refine the discretization".into())
    })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::ResolutionFailure("non-finite solution of the collocation system".into()));
    }
    let resid = (&system.matrix * &x - &system.rhs).norm() / system.rhs.norm().max(f64::MIN_POSITIVE);
    Ok((x, resid))
}

fn densities(x: &DVector<f64>, count: usize) -> Vec<Vec2> {
    (0..count).map(|j| Vec2::new(x[2 * j], x[2 * j + 1])).collect()
}

/// Flow in the vessel with no robot present.
pub fn solve_channel(vessel: &VesselGeometry, fluid: &FluidProperties, inlet_u: f64, disc: &Discretization) -> Result<FlowField> {
    vessel.validate()?;
    fluid.validate()?;
    disc.validate()?;
    let mesh = mesh::build(vessel, inlet_u, None, disc)?;
    let system = assemble(&mesh, fluid.viscosity, None);
    let (x, resid) = linear_solve(&system)?;
    if resid > disc.solve_tolerance {
        return Err(Error::SolverFailure(format!("linear residual {resid:.3e}")));
    }
    let density = densities(&x, mesh.panels.len());
    let mut field = FlowField { mesh, density, viscosity: fluid.viscosity, ln_scale: system.ln_scale, pressure_offset: 0.0 };
    field.pressure_offset = -field.raw_pressure(field.mesh.gauge_point);
    Ok(field)
}

/// Solves the flow for a scenario, returning the robot's rigid motion and the
/// traction on its surface.
pub fn solve_flow(scenario: &Scenario, disc: &Discretization) -> Result<FlowSolution> {
    scenario.validate()?;
    disc.validate()?;
    let t0 = Instant::now();
    let gap = scenario.min_gap()?;
    let mesh = mesh::build(
        &scenario.vessel,
        scenario.inlet_u,
        Some(RobotGeometry { shape: &scenario.shape, pose: &scenario.pose, gap }),
        disc,
    )?;
    let t1 = Instant::now();
    let center = scenario.pose.center();
    let eta = scenario.fluid.viscosity;
    let system = assemble(&mesh, eta, Some(center));
    let t2 = Instant::now();
    let (x, resid) = linear_solve(&system)?;
    let t3 = Instant::now();
    if resid > disc.solve_tolerance {
        return Err(Error::SolverFailure(format!("linear residual {resid:.3e} exceeds tolerance")));
    }
    let np = mesh.panels.len();
    let motion = RigidMotion { vx: x[2 * np + 1], vy: x[2 * np + 2], omega: x[2 * np + 3] };
    let density = densities(&x, np);
    let mut field = FlowField { mesh, density, viscosity: eta, ln_scale: system.ln_scale, pressure_offset: 0.0 };
    field.pressure_offset = -field.raw_pressure(field.mesh.gauge_point);
    // constant pressure inside the robot, in the outlet gauge
    let interior_pressure = field.pressure(center);

    let mut traction = Vec::with_capacity(np - field.mesh.outer);
    let (mut force, mut torque) = (Vec2::zeros(), 0.0);
    for (panel, f) in field.mesh.panels.iter().zip(&field.density).skip(field.mesh.outer) {
        debug_assert_eq!(panel.part, Part::Robot);
        let t = -f - panel.normal * interior_pressure;
        let body = scenario.pose.to_body(panel.mid);
        traction.push(TractionSample { theta: crate::physics::wrap_angle(body.y.atan2(body.x)), tx: t.x, ty: t.y });
        force += t * panel.length;
        torque += (panel.mid - center).perp(&t) * panel.length;
    }
    let scale = eta * scenario.inlet_u.abs().max(f64::MIN_POSITIVE);
    let r = scenario.shape.equivalent_radius();
    // internal units: Pa·µm for force, Pa·µm² for torque
    let residuals = Residuals {
        net_force: force.norm() * 1e-6,
        net_torque: torque.abs() * 1e-12,
        relative_force: force.norm() / scale,
        relative_torque: torque.abs() / (scale * r),
        linear_residual: resid,
    };
    let t4 = Instant::now();
    Ok(FlowSolution {
        motion,
        pose: scenario.pose,
        shape: scenario.shape,
        traction,
        residuals,
        timings: SolveTimings {
            mesh_s: (t1 - t0).as_secs_f64(),
            assembly_s: (t2 - t1).as_secs_f64(),
            factorization_s: (t3 - t2).as_secs_f64(),
            postprocess_s: (t4 - t3).as_secs_f64(),
        },
        field,
    })
}
