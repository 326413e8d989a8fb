//! Sensor sampling of the surface traction.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::{FlowSolution, TractionSample};
use crate::error::{Error, Result};
use crate::scenario::{RobotPose, Vec2};

/// `n` sensors at body angles `2π j / n`, counterclockwise from the front.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorArray {
    pub n: usize,
}

impl Default for SensorArray {
    fn default() -> Self {
        SensorArray { n: 30 }
    }
}

impl SensorArray {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("need at least two sensors, got {n}")));
        }
        Ok(SensorArray { n })
    }

    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.angle(j)).collect()
    }
}

/// Normal (tension positive) and tangential (counterclockwise positive)
/// traction at each sensor, Pa. Normal components are gauge-normalized to
/// sum to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressReading {
    pub timestamp: f64,
    pub normal: Vec<f64>,
    pub tangential: Vec<f64>,
}

impl StressReading {
    /// Builds a reading from raw components, applying the zero-sum gauge to
    /// the normal channel.
    pub fn from_raw(timestamp: f64, mut normal: Vec<f64>, tangential: Vec<f64>) -> Result<Self> {
        if normal.len() != tangential.len() || normal.len() < 2 {
            return Err(Error::Config("normal and tangential channels must match (n >= 2)".into()));
        }
        gauge_normalize(&mut normal);
        Ok(StressReading { timestamp, normal, tangential })
    }

    pub fn len(&self) -> usize {
        self.normal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normal.is_empty()
    }

    /// Magnitude of the stress vector at each sensor.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.normal.iter().zip(&self.tangential).map(|(a, b)| a.hypot(*b)).collect()
    }

    pub fn scaled(&self, factor: f64) -> StressReading {
        StressReading {
            timestamp: self.timestamp,
            normal: self.normal.iter().map(|v| v * factor).collect(),
            tangential: self.tangential.iter().map(|v| v * factor).collect(),
        }
    }

    /// Cyclic relabeling: sensor `j` of the result reads what sensor
    /// `j + offset` read before.
    pub fn rotated(&self, offset: usize) -> StressReading {
        let n = self.len();
        let pick = |v: &Vec<f64>| (0..n).map(|j| v[(j + offset) % n]).collect();
        StressReading { timestamp: self.timestamp, normal: pick(&self.normal), tangential: pick(&self.tangential) }
    }
}

/// Subtracts the mean so the values sum to zero.
pub fn gauge_normalize(values: &mut [f64]) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in values.iter_mut() {
        *v -= mean;
    }
}

/// Periodic linear interpolation of the lab-frame traction vector at body
/// angle `theta`, from samples sorted by angle.
fn interpolate(sorted: &[TractionSample], theta: f64) -> Vec2 {
    let n = sorted.len();
    let k = sorted.partition_point(|s| s.theta <= theta);
    let (lo, hi) = if k == 0 || k == n { (n - 1, 0) } else { (k - 1, k) };
    let (a, b) = (&sorted[lo], &sorted[hi]);
    let span = (b.theta - a.theta).rem_euclid(TAU);
    let offset = (theta - a.theta).rem_euclid(TAU);
    let w = if span > 0.0 { offset / span } else { 0.0 };
    Vec2::new(a.tx + w * (b.tx - a.tx), a.ty + w * (b.ty - a.ty))
}

/// Samples the solved traction at the sensors and decomposes it into
/// surface-normal and counterclockwise-tangential components.
pub fn surface_traction(sol: &FlowSolution, sensors: &SensorArray, pose: &RobotPose) -> StressReading {
    let mut sorted = sol.traction.clone();
    sorted.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    let mut normal = Vec::with_capacity(sensors.n);
    let mut tangential = Vec::with_capacity(sensors.n);
    for theta in sensors.angles() {
        let t = interpolate(&sorted, theta);
        let phi = pose.psi + sol.shape.normal_angle(theta);
        let n = Vec2::new(phi.cos(), phi.sin());
        let tau = Vec2::new(-n.y, n.x);
        normal.push(t.dot(&n));
        tangential.push(t.dot(&tau));
    }
    gauge_normalize(&mut normal);
    StressReading { timestamp: 0.0, normal, tangential }
}
