//! Randomized sample corpus, model fitting and evaluation.

mod dataset;
mod fit;
mod metrics;

pub use dataset::{read_dataset_csv, write_dataset_csv};
pub use fit::{fit_diameter_glm, fit_logistic, fit_speed_ratio, train, FitOptions};
pub use metrics::{evaluate, ErrorStats, Evaluation, MetricsReport, ScatterRow, Stratified, STRATUM_LABELS};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};
use crate::physics::{relative_position, wrap_angle};
use crate::scenario::{FluidProperties, RigidMotion, RobotPose, RobotShape, Scenario, VesselGeometry};
use crate::solver::{advance_with, solve_flow, surface_traction, AdvanceOptions, Discretization, SensorArray, StressReading};

/// Canonical seed for the reference corpus.
pub const DEFAULT_SEED: u64 = 20240101;

/// Upper bound on the Reynolds number of any sampled scenario.
pub const MAX_REYNOLDS: f64 = 0.04;

/// Sampling ranges and corpus layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub count: usize,
    pub seed: u64,
    /// Inlet speed magnitude range, µm/s; the direction is a fair coin.
    pub speed: [f64; 2],
    pub diameter: [f64; 2],
    pub length: [f64; 2],
    /// Largest horizontal offset of the robot from the segment middle, µm.
    pub x_offset: f64,
    /// Smallest robot-wall gap, µm.
    pub min_gap: f64,
    pub radius: f64,
    pub fluid: FluidProperties,
    pub sensors: usize,
    /// Leading samples used for training; the rest are the test split.
    pub train: usize,
    /// Test samples that also get a second reading after `dt`.
    pub advance: usize,
    pub dt: f64,
    /// Redraw budget per sample after solver failures.
    pub max_redraws: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            count: 1000,
            seed: DEFAULT_SEED,
            speed: [200.0, 1000.0],
            diameter: [5.0, 10.0],
            length: [18.0, 20.0],
            x_offset: 2.0,
            min_gap: 0.5,
            radius: 1.0,
            fluid: FluidProperties::blood_plasma(),
            sensors: 30,
            train: 800,
            advance: 200,
            dt: 5e-3,
            max_redraws: 10,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let range = |r: [f64; 2], lo: f64| r[0] >= lo && r[1] >= r[0] && r[1].is_finite();
        let ok = self.count > 0
            && self.train <= self.count
            && self.advance <= self.count - self.train
            && range(self.speed, 0.0)
            && self.speed[1] > 0.0
            && range(self.length, 0.0)
            && self.length[0] > 0.0
            && self.radius > 0.0
            && self.min_gap > 0.0
            && self.diameter[0] > 2.0 * (self.radius + self.min_gap)
            && range(self.diameter, 0.0)
            && self.x_offset >= 0.0
            && 2.0 * (self.x_offset + self.radius + self.min_gap) < self.length[0]
            && self.sensors >= 2
            && self.dt > 0.0;
        if !ok {
            return Err(Error::Config("sampler ranges are inconsistent".into()));
        }
        self.fluid.validate()
    }

    pub fn test_count(&self) -> usize {
        self.count - self.train
    }

    /// Draws scenario `index`, attempt `attempt`, from its own RNG stream.
    pub fn draw(&self, index: usize, attempt: usize) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let mut s = None;
        for _ in 0..=attempt {
            s = Some(self.draw_from(&mut rng));
        }
        s.expect("at least one draw")
    }

    fn draw_from(&self, rng: &mut ChaCha8Rng) -> Scenario {
        let uniform = |rng: &mut ChaCha8Rng, r: [f64; 2]| if r[1] > r[0] { rng.random_range(r[0]..r[1]) } else { r[0] };
        let speed = uniform(rng, self.speed);
        let direction = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let d = uniform(rng, self.diameter);
        let l = uniform(rng, self.length);
        let x = l / 2.0 + uniform(rng, [-self.x_offset, self.x_offset]);
        let y = uniform(rng, [0.0, d / 2.0 - self.radius - self.min_gap]);
        let psi = rng.random_range(0.0..TAU);
        Scenario {
            fluid: self.fluid.clone(),
            vessel: VesselGeometry::straight(d, l),
            shape: RobotShape::Circle { r: self.radius },
            pose: RobotPose { x, y, psi },
            inlet_u: direction * speed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Ground truth for one sample. Angles are body-frame, radians in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub relpos: f64,
    pub diameter: f64,
    pub wall_distance: f64,
    pub omega: f64,
    pub speed_ratio: f64,
    pub speed: f64,
    pub wall_direction: f64,
    pub motion_direction: f64,
}

impl Labels {
    /// Labels of a straight-vessel scenario with a circular robot.
    pub fn from_solution(s: &Scenario, motion: &RigidMotion) -> Result<Labels> {
        let r = s.shape.equivalent_radius();
        let d = s.vessel.d;
        let y = s.pose.y;
        let wall_lab = if y >= 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 };
        Ok(Labels {
            relpos: relative_position(y, d, r)?,
            diameter: d,
            wall_distance: d / 2.0 - y.abs(),
            omega: motion.omega,
            speed_ratio: motion.speed() / (motion.omega.abs() * r),
            speed: motion.speed(),
            wall_direction: wrap_angle(wall_lab - s.pose.psi),
            motion_direction: wrap_angle(motion.vy.atan2(motion.vx) - s.pose.psi),
        })
    }
}

impl Labels {
    /// Truth from the local geometry around the robot, for any vessel: the
    /// nearest wall point fixes the wall direction and distance, and the
    /// two wall distances fix the local diameter and relative position.
    pub fn from_local_geometry(s: &Scenario, motion: &RigidMotion) -> Result<Labels> {
        let r = s.shape.equivalent_radius();
        let (wall, dist) = s.nearest_wall_point()?;
        let c = s.pose.center();
        Ok(Labels {
            relpos: s.local_relative_position()?,
            diameter: s.local_diameter()?,
            wall_distance: dist,
            omega: motion.omega,
            speed_ratio: motion.speed() / (motion.omega.abs() * r),
            speed: motion.speed(),
            wall_direction: wrap_angle((wall.y - c.y).atan2(wall.x - c.x) - s.pose.psi),
            motion_direction: wrap_angle(motion.vy.atan2(motion.vx) - s.pose.psi),
        })
    }
}

/// Second reading of a sample after the robot has moved for `dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaterReading {
    pub dt: f64,
    pub reading: StressReading,
    /// Mean rotation rate over the interval, rad/s.
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: usize,
    pub split: Split,
    pub scenario: Scenario,
    pub motion: RigidMotion,
    pub reading: StressReading,
    pub labels: Labels,
    pub later: Option<LaterReading>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// Solver failures that forced a redraw.
    pub redraws: usize,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.split == split)
    }
}

fn solve_sample(cfg: &SamplerConfig, disc: &Discretization, id: usize, scenario: &Scenario) -> Result<Sample> {
    let sensors = SensorArray::new(cfg.sensors)?;
    let sol = solve_flow(scenario, disc)?;
    let reading = surface_traction(&sol, &sensors, &scenario.pose);
    let labels = Labels::from_solution(scenario, &sol.motion)?;
    let split = if id < cfg.train { Split::Train } else { Split::Test };
    let later = if split == Split::Test && id - cfg.train < cfg.advance {
        let opts = AdvanceOptions { co_moving: true, ..Default::default() };
        let next = advance_with(scenario, cfg.dt, disc, &opts)?;
        let sol_b = solve_flow(&next.scenario, disc)?;
        let mut reading = surface_traction(&sol_b, &sensors, &next.scenario.pose);
        reading.timestamp = cfg.dt;
        Some(LaterReading { dt: cfg.dt, reading, omega: next.rotation / cfg.dt })
    } else {
        None
    };
    Ok(Sample { id, split, scenario: scenario.clone(), motion: sol.motion, reading, labels, later })
}

/// Draws, solves and labels the corpus. Draws are independent streams keyed
/// by `(seed, index)`, so the result does not depend on the thread count.
pub fn generate_samples(cfg: &SamplerConfig, disc: &Discretization) -> Result<Dataset> {
    cfg.validate()?;
    disc.validate()?;
    let results: Vec<Result<(Sample, usize)>> = (0..cfg.count)
        .into_par_iter()
        .map(|id| {
            let mut failures = 0;
            for attempt in 0..=cfg.max_redraws {
                let s = cfg.draw(id, attempt);
                if s.reynolds() >= MAX_REYNOLDS || s.min_gap()? < cfg.min_gap - 1e-9 {
                    continue;
                }
                match solve_sample(cfg, disc, id, &s) {
                    Ok(sample) => return Ok((sample, failures)),
                    Err(e) => {
                        log::warn!("sample {id} attempt {attempt}: {e}");
                        failures += 1;
                    }
                }
            }
            Err(Error::SolverFailure(format!("sample {id}: no successful draw in {} attempts", cfg.max_redraws + 1)))
        })
        .collect();
    let mut samples = Vec::with_capacity(cfg.count);
    let mut redraws = 0;
    for r in results {
        let (s, f) = r?;
        redraws += f;
        samples.push(s);
    }
    if redraws * 100 > cfg.count {
        return Err(Error::SolverFailure(format!("{redraws} solver failures in {} samples exceeds 1%", cfg.count)));
    }
    Ok(Dataset { samples, redraws })
}
