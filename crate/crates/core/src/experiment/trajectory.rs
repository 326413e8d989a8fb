//! Time-stepped runs that estimate the robot state along the way.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate_geometry, estimate_rates, EstimatorSettings, ModelSet};
use crate::scenario::Scenario;
use crate::solver::{advance_from, solve_flow, surface_traction, AdvanceOptions, Discretization, SensorArray, StressReading};
use crate::training::Labels;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    /// Simulated time, s.
    pub duration: f64,
    /// Interval between readings, s.
    pub dt: f64,
    /// Estimate at every this many readings, comparing with the reading
    /// this many steps earlier.
    pub estimate_every: usize,
    pub sensors: usize,
    /// Let straight vessels travel with the robot (see [`AdvanceOptions`]).
    pub co_moving: bool,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig { duration: 0.05, dt: 1e-3, estimate_every: 5, sensors: 30, co_moving: true }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("trajectory dt must be positive, got {}", self.dt)));
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return Err(Error::Config("trajectory duration must cover at least one step".into()));
        }
        if self.estimate_every == 0 {
            return Err(Error::Config("estimate_every must be at least 1".into()));
        }
        SensorArray::new(self.sensors)?;
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// One reading along a trajectory. Lab `x` includes travel of a co-moving
/// window. Estimate columns are empty except at estimation steps; geometry
/// comes from the current reading and rates from the pair ending here.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub true_relpos: f64,
    pub true_diameter: f64,
    pub true_wall_distance: f64,
    pub true_wall_direction: f64,
    pub true_motion_direction: f64,
    pub true_omega: f64,
    /// Mean rotation rate over the estimation interval.
    pub true_omega_interval: Option<f64>,
    pub true_speed: f64,
    pub true_speed_ratio: f64,
    pub est_wall_direction: Option<f64>,
    pub est_motion_direction: Option<f64>,
    pub est_relpos: Option<f64>,
    pub est_diameter: Option<f64>,
    pub est_wall_distance: Option<f64>,
    pub est_omega: Option<f64>,
    pub est_speed_ratio: Option<f64>,
    pub est_speed: Option<f64>,
    pub correlation: Option<f64>,
    pub in_range: Option<bool>,
    pub flags: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    /// Why the run stopped early, if it did.
    pub terminated: Option<String>,
    pub terminated_kind: Option<String>,
    pub solves: usize,
}

impl Trajectory {
    pub fn estimated(&self) -> impl Iterator<Item = &TrajectoryRow> {
        self.rows.iter().filter(|r| r.correlation.is_some())
    }
}

pub fn run_trajectory(
    start: &Scenario,
    cfg: &TrajectoryConfig,
    disc: &Discretization,
    models: &ModelSet,
    settings: &EstimatorSettings,
) -> Result<Trajectory> {
    cfg.validate()?;
    let sensors = SensorArray::new(cfg.sensors)?;
    let opts = AdvanceOptions { co_moving: cfg.co_moving, max_step: cfg.dt, ..Default::default() };
    let every = cfg.estimate_every;

    let mut current = start.clone();
    let mut sol = solve_flow(&current, disc)?;
    let mut solves = 1;
    let mut lab_x = current.pose.x;
    let mut readings: Vec<StressReading> = Vec::with_capacity(cfg.steps() + 1);
    let mut psis = Vec::with_capacity(cfg.steps() + 1);
    let mut rows = Vec::with_capacity(cfg.steps() + 1);
    let mut terminated = None;

    for k in 0..=cfg.steps() {
        if k > 0 {
            let stepped = advance_from(&current, Some(sol.motion), cfg.dt, disc, &opts).and_then(|a| {
                let next = solve_flow(&a.scenario, disc)?;
                Ok((a, next))
            });
            match stepped {
                Ok((a, next)) => {
                    solves += a.solves + 1;
                    lab_x += a.displacement[0];
                    current = a.scenario;
                    sol = next;
                }
                Err(e) => {
                    log::warn!("trajectory stopped at step {k}: {e}");
                    terminated = Some(e);
                    break;
                }
            }
        }
        let t = k as f64 * cfg.dt;
        let mut reading = surface_traction(&sol, &sensors, &current.pose);
        reading.timestamp = t;
        let labels = Labels::from_local_geometry(&current, &sol.motion)?;
        let mut row = TrajectoryRow {
            step: k,
            t,
            x: lab_x,
            y: current.pose.y,
            psi: current.pose.psi,
            true_relpos: labels.relpos,
            true_diameter: labels.diameter,
            true_wall_distance: labels.wall_distance,
            true_wall_direction: labels.wall_direction,
            true_motion_direction: labels.motion_direction,
            true_omega: labels.omega,
            true_speed: labels.speed,
            true_speed_ratio: labels.speed_ratio,
            ..Default::default()
        };
        if k >= every && k % every == 0 {
            let interval = every as f64 * cfg.dt;
            row.true_omega_interval = Some((current.pose.psi - psis[k - every]) / interval);
            let mut rep = estimate_geometry(&reading, models, &current.shape, settings);
            estimate_rates(&mut rep, &readings[k - every], &reading, interval, &current.shape, settings);
            row.est_wall_direction = rep.wall_direction;
            row.est_motion_direction = rep.motion_direction;
            row.est_relpos = rep.relpos;
            row.est_diameter = rep.diameter;
            row.est_wall_distance = rep.wall_distance;
            row.est_omega = rep.angular_velocity;
            row.est_speed_ratio = rep.speed_ratio;
            row.est_speed = rep.speed;
            row.correlation = rep.correlation;
            row.in_range = Some(rep.in_range);
            row.flags = rep.flags.join(";");
        }
        readings.push(reading);
        psis.push(current.pose.psi);
        rows.push(row);
    }
    Ok(Trajectory {
        rows,
        terminated_kind: terminated.as_ref().map(|e| e.kind().to_string()),
        terminated: terminated.map(|e| e.to_string()),
        solves,
    })
}
