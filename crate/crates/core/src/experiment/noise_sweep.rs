//! Sweeps of the sensor design: analytic and simulated SNR, and how much
//! the estimates degrade on the example scenario.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{full_estimate, EstimateReport, EstimatorSettings, ModelSet};
use crate::noise::*;
use crate::physics::angle_difference;
use crate::scenario::{Scenario, VesselGeometry};
use crate::solver::{advance_with, solve_flow, surface_traction, AdvanceOptions, Discretization, SensorArray, StressReading};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSweepConfig {
    /// Temperature, K.
    pub temperature: f64,
    /// Viscosity, Pa·s.
    pub viscosity: f64,
    /// Robot radius, m.
    pub radius: f64,
    pub design: SensorDesign,
    /// Averaging times, s.
    pub times: Vec<f64>,
    /// Sensor sizes, m; the coverage follows from the count.
    pub sizes: Vec<f64>,
    /// Peak flow speeds, µm/s; the nominal stress scales with speed.
    pub speeds: Vec<f64>,
    /// Monte Carlo runs per row (0 skips the simulation).
    pub monte_carlo_runs: usize,
    /// Simulated horizon in damping times.
    pub monte_carlo_horizon: f64,
    /// Noisy reading pairs per row for the estimator errors.
    pub trials: usize,
    /// Points kept from the example oscillator trace.
    pub trace_points: usize,
    pub seed: u64,
}

impl Default for NoiseSweepConfig {
    fn default() -> Self {
        NoiseSweepConfig {
            temperature: 310.0,
            viscosity: 1e-3,
            radius: 1e-6,
            design: SensorDesign::reference(),
            times: vec![5e-5, 1.5e-4, 5e-4, 1.5e-3, 5e-3, 1.5e-2, 5e-2],
            sizes: vec![0.2e-6, 0.3e-6, 0.4e-6, 0.5e-6, 0.6e-6],
            speeds: vec![250.0, 500.0, 1000.0, 2000.0],
            monte_carlo_runs: 2000,
            monte_carlo_horizon: 1000.0,
            trials: 40,
            trace_points: 1000,
            seed: crate::training::DEFAULT_SEED,
        }
    }
}

impl NoiseSweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        if !(self.temperature > 0.0 && self.viscosity > 0.0 && self.radius > 0.0) {
            return Err(Error::Config("temperature, viscosity and radius must be positive".into()));
        }
        if self.times.iter().chain(&self.sizes).chain(&self.speeds).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("sweep values must be positive".into()));
        }
        for &s in &self.sizes {
            self.sized(s).validate()?;
        }
        if self.monte_carlo_runs == 1 || !(self.monte_carlo_horizon > 10.0) {
            return Err(Error::Config("Monte Carlo needs 0 or at least 2 runs and a horizon above 10 damping times".into()));
        }
        Ok(())
    }

    fn sized(&self, size: f64) -> SensorDesign {
        let coverage = self.design.count as f64 * size * size / (4.0 * std::f64::consts::PI * self.radius.powi(2));
        SensorDesign { size, coverage, ..self.design }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepRow {
    /// Swept quantity: `time`, `size` or `speed`.
    pub parameter: String,
    pub t_avg: f64,
    pub size: f64,
    pub coverage: f64,
    /// µm/s.
    pub speed: f64,
    /// Pa.
    pub stress: f64,
    pub snr_single: f64,
    pub snr_array: f64,
    pub snr_array_db: f64,
    /// Per-sensor noise sd, Pa.
    pub noise_sd: f64,
    /// Single-sensor SNR from simulated noise, rescaled to `t_avg`.
    pub snr_single_mc: Option<f64>,
    // mean absolute change of each estimate from its noise-free value
    pub err_wall_direction_deg: f64,
    pub err_motion_direction_deg: f64,
    pub err_relpos: f64,
    pub err_diameter: f64,
    pub err_omega: f64,
    /// Fraction of trials flagged as unreliable angular velocity.
    pub unreliable_fraction: f64,
}

/// Clean reading pair on the example scenario and its noise-free estimates.
struct Base {
    a: StressReading,
    b: StressReading,
    dt: f64,
    scenario: Scenario,
    clean: EstimateReport,
    speed: f64,
}

fn base(disc: &Discretization, models: &ModelSet, settings: &EstimatorSettings) -> Result<Base> {
    let mut s = Scenario::table2();
    s.vessel = VesselGeometry::straight(6.0, 18.0);
    s.pose.x = 9.0;
    let sensors = SensorArray::default();
    let sol = solve_flow(&s, disc)?;
    let dt = 5e-3;
    let opts = AdvanceOptions { co_moving: true, ..Default::default() };
    let moved = advance_with(&s, dt, disc, &opts)?;
    let later = solve_flow(&moved.scenario, disc)?;
    let a = surface_traction(&sol, &sensors, &s.pose);
    let b = surface_traction(&later, &sensors, &moved.scenario.pose);
    let clean = full_estimate(&a, &b, dt, models, &s.shape, settings);
    if clean.wall_direction.is_none() || clean.relpos.is_none() || clean.angular_velocity.is_none() {
        return Err(Error::DegenerateInput(format!("noise-free estimates failed: {:?}", clean.flags)));
    }
    Ok(Base { a, b, dt, clean, speed: s.inlet_u, scenario: s })
}

pub fn run_noise_sweep(cfg: &NoiseSweepConfig, disc: &Discretization, models: &ModelSet, settings: &EstimatorSettings) -> Result<Vec<NoiseSweepRow>> {
    cfg.validate()?;
    let base = base(disc, models, settings)?;
    let mut cases: Vec<(&str, SensorDesign, f64)> = Vec::new();
    for &t in &cfg.times {
        cases.push(("time", SensorDesign { time: t, ..cfg.design }, base.speed));
    }
    for &s in &cfg.sizes {
        cases.push(("size", cfg.sized(s), base.speed));
    }
    for &u in &cfg.speeds {
        cases.push(("speed", SensorDesign { stress: cfg.design.stress * u / base.speed, ..cfg.design }, u));
    }
    cases
        .iter()
        .enumerate()
        .map(|(i, (parameter, design, speed))| {
            let row_seed = cfg.seed.wrapping_add(1_000_003 * i as u64);
            row(cfg, &base, parameter, design, *speed, row_seed, models, settings)
        })
        .collect()
}

/// One oscillator run at the reference design, released at rest from the
/// mean displacement and followed over the Monte Carlo horizon.
pub fn oscillator_trace(cfg: &NoiseSweepConfig) -> Result<Vec<TracePoint>> {
    cfg.validate()?;
    let p = OscillatorParams::from_design(&cfg.design, cfg.temperature, cfg.viscosity, None);
    let dt = 1.0 / (100.0 * p.gamma);
    let t_end = cfg.monte_carlo_horizon / p.gamma;
    let steps = (t_end / dt).round() as usize;
    let every = (steps / cfg.trace_points.max(1)).max(1);
    simulate_oscillator(&p, t_end, dt, cfg.seed, false, every)
}

#[allow(clippy::too_many_arguments)]
fn row(
    cfg: &NoiseSweepConfig,
    base: &Base,
    parameter: &str,
    design: &SensorDesign,
    speed: f64,
    seed: u64,
    models: &ModelSet,
    settings: &EstimatorSettings,
) -> Result<NoiseSweepRow> {
    let (temp, eta) = (cfg.temperature, cfg.viscosity);
    let snr_single_value = snr_single(design, temp, eta);
    let snr_array_value = snr_array(design, cfg.radius, temp, eta);

    let snr_single_mc = if cfg.monte_carlo_runs > 0 {
        let p = OscillatorParams::from_design(design, temp, eta, None);
        let mc = monte_carlo(&p, cfg.monte_carlo_horizon / p.gamma, 1.0 / (100.0 * p.gamma), cfg.monte_carlo_runs, seed)?;
        // the sd of A(t)/t falls as 1/√t, so simulated noise carries over
        let sd_at_t = mc.sd * (mc.t / design.time).sqrt();
        let mean = p.alpha / (p.omega * p.omega);
        Some((mean / sd_at_t).powi(2))
    } else {
        None
    };

    // the flow is linear in speed: stresses and rates scale with it, and the
    // same pair of poses is reached in proportionally less time
    let scale = speed / base.speed;
    let (a, b) = (base.a.scaled(scale), base.b.scaled(scale));
    let dt = base.dt / scale;
    let shape = base.scenario.shape;
    let c = &base.clean;
    let errors: Vec<[f64; 6]> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let k = k as u64;
            let na = perturb_readings(&a, design, temp, eta, seed.wrapping_add(2 * k + 1));
            let nb = perturb_readings(&b, design, temp, eta, seed.wrapping_add(2 * k + 2));
            let rep = full_estimate(&na, &nb, dt, models, &shape, settings);
            let ang = |v: Option<f64>, clean: Option<f64>| match (v, clean) {
                (Some(v), Some(c)) => angle_difference(v, c).abs().to_degrees(),
                _ => 180.0,
            };
            let abs = |v: Option<f64>, clean: Option<f64>| match (v, clean) {
                (Some(v), Some(c)) => (v - c).abs(),
                _ => f64::NAN,
            };
            [
                ang(rep.wall_direction, c.wall_direction),
                ang(rep.motion_direction, c.motion_direction),
                abs(rep.relpos, c.relpos),
                abs(rep.diameter, c.diameter),
                abs(rep.angular_velocity, c.angular_velocity.map(|w| w * scale)),
                if rep.flags.iter().any(|f| f.starts_with("angular-velocity")) { 1.0 } else { 0.0 },
            ]
        })
        .collect();
    let mean = |j: usize| {
        if errors.is_empty() {
            f64::NAN
        } else {
            errors.iter().map(|e| e[j]).sum::<f64>() / errors.len() as f64
        }
    };
    Ok(NoiseSweepRow {
        parameter: parameter.to_string(),
        t_avg: design.time,
        size: design.size,
        coverage: design.coverage,
        speed,
        stress: design.stress,
        snr_single: snr_single_value,
        snr_array: snr_array_value,
        snr_array_db: decibels(snr_array_value),
        noise_sd: sensor_noise_sd(design, temp, eta),
        snr_single_mc,
        err_wall_direction_deg: mean(0),
        err_motion_direction_deg: mean(1),
        err_relpos: mean(2),
        err_diameter: mean(3),
        err_omega: mean(4),
        unreliable_fraction: mean(5),
    })
}
