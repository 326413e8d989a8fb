//! Thermal noise of viscously damped stress sensors.
//!
//! A sensor is a damped oscillator driven by the applied stress and by
//! thermal fluctuations,
//! `dX = V dt`, `dV = (−γV − ω²X + α) dt + σ dW`, `dA = X dt`,
//! and reports the time average `A(t)/t`. All quantities here are SI.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::physics::BOLTZMANN;
use crate::solver::{gauge_normalize, StressReading};

/// Density of the sensor's moving part, kg/m³.
pub const SENSOR_DENSITY: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Damping rate, 1/s.
    pub gamma: f64,
    /// Natural angular frequency, rad/s.
    pub omega: f64,
    /// Mass, kg.
    pub mass: f64,
    /// Applied acceleration `f/m`, m/s².
    pub alpha: f64,
    /// Fluctuation magnitude, m/s^{3/2}.
    pub sigma: f64,
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.omega > 0.0 && self.mass > 0.0 && self.sigma >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config("oscillator needs γ, ω, m > 0 and σ ≥ 0".into()));
        }
        Ok(())
    }

    /// Oscillator of a sensor with the given design: mass `ρ s³`, damping
    /// `g η s / m`, applied force `p s²`, and `ω = γ/2` unless given.
    pub fn from_design(design: &SensorDesign, temperature: f64, viscosity: f64, omega: Option<f64>) -> OscillatorParams {
        let s = design.size;
        let mass = SENSOR_DENSITY * s.powi(3);
        let gamma = design.damping * viscosity * s / mass;
        OscillatorParams {
            gamma,
            omega: omega.unwrap_or(gamma / 2.0),
            mass,
            alpha: design.stress * s * s / mass,
            sigma: fluctuation_sigma(gamma, mass, temperature),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorDesign {
    /// Sensor size `s`, m.
    pub size: f64,
    /// Averaging time, s.
    pub time: f64,
    /// Geometric damping factor `g` (8 for a flat disk, 3π for a sphere).
    pub damping: f64,
    /// Fraction of the robot surface covered by sensors.
    pub coverage: f64,
    pub count: usize,
    /// Nominal stress, Pa.
    pub stress: f64,
}

impl SensorDesign {
    /// Disk sensors covering half of a 1 µm robot with 30 sensors, 1 Pa
    /// stress averaged for 5 ms.
    pub fn reference() -> SensorDesign {
        let (r, coverage, count) = (1e-6, 0.5, 30);
        SensorDesign { size: sensor_size(r, coverage, count), time: 5e-3, damping: 8.0, coverage, count, stress: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.size > 0.0 && self.time > 0.0 && self.damping > 0.0 && self.count >= 1 && self.stress.is_finite()) {
            return Err(Error::Config("sensor design needs s, t, g > 0 and n ≥ 1".into()));
        }
        if !(self.coverage > 0.0 && self.coverage <= 1.0) {
            return Err(Error::Config(format!("coverage {} outside (0, 1]", self.coverage)));
        }
        Ok(())
    }
}

/// Side of a square sensor when `n` of them cover fraction `λ` of a sphere
/// of radius `r`: `s² = 4πr²λ/n`.
pub fn sensor_size(r: f64, coverage: f64, count: usize) -> f64 {
    (4.0 * PI * r * r * coverage / count as f64).sqrt()
}

/// `σ = √(2 k_B T γ / m)`.
pub fn fluctuation_sigma(gamma: f64, mass: f64, temperature: f64) -> f64 {
    (2.0 * BOLTZMANN * temperature * gamma / mass).sqrt()
}

/// Single-sensor SNR `p² s³ t / (2 k_B T g η)`.
pub fn snr_single(design: &SensorDesign, temperature: f64, viscosity: f64) -> f64 {
    let s = design.size;
    design.stress.powi(2) * s.powi(3) * design.time / (2.0 * BOLTZMANN * temperature * design.damping * viscosity)
}

/// SNR of the sensor-array Fourier combinations,
/// `(4 p² r³ t / (k_B T g η)) √((πλ)³/n)`.
pub fn snr_array(design: &SensorDesign, r: f64, temperature: f64, viscosity: f64) -> f64 {
    4.0 * design.stress.powi(2) * r.powi(3) * design.time / (BOLTZMANN * temperature * design.damping * viscosity)
        * ((PI * design.coverage).powi(3) / design.count as f64).sqrt()
}

pub fn decibels(snr: f64) -> f64 {
    10.0 * snr.log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumStats {
    pub mean: f64,
    pub sd: f64,
    /// False when `t ≤ 10/γ`, where the equilibrium formulas do not apply.
    pub valid_regime: bool,
}

/// Mean `α/ω²` and standard deviation `σ/(ω²√t)` of `A(t)/t`.
pub fn equilibrium_stats(p: &OscillatorParams, t: f64) -> EquilibriumStats {
    let w2 = p.omega * p.omega;
    let valid_regime = t > 10.0 / p.gamma;
    if !valid_regime {
        log::warn!("averaging time {t:e} s is not long compared with the damping time {:e} s", 1.0 / p.gamma);
    }
    EquilibriumStats { mean: p.alpha / w2, sd: p.sigma / (w2 * t.sqrt()), valid_regime }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub a: f64,
}

fn check_step(p: &OscillatorParams, dt: f64, t_end: f64) -> Result<usize> {
    p.validate()?;
    if !(dt > 0.0 && t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Config("time step must be positive and the end time finite".into()));
    }
    if dt * p.gamma > 0.5 || dt * p.omega > 0.5 {
        return Err(Error::StepFailure(format!(
            "dt = {dt:e} s is not small against 1/γ = {:e} s and 1/ω = {:e} s",
            1.0 / p.gamma,
            1.0 / p.omega
        )));
    }
    let steps = (t_end / dt).round() as usize;
    if steps > 2_000_000_000 {
        return Err(Error::Config(format!("{steps} steps is too many")));
    }
    Ok(steps)
}

/// Euler–Maruyama integration. When `equilibrium_start` is set, `X` and `V`
/// start from their stationary distribution; otherwise at `X = α/ω²`,
/// `V = 0`. `record_every` thins the returned trace (the final point is
/// always included).
pub fn simulate_oscillator(
    p: &OscillatorParams,
    t_end: f64,
    dt: f64,
    seed: u64,
    equilibrium_start: bool,
    record_every: usize,
) -> Result<Vec<TracePoint>> {
    let steps = check_step(p, dt, t_end)?;
    let every = record_every.max(1);
    let mut trace = Vec::with_capacity(steps / every + 2);
    run(p, steps, dt, seed, equilibrium_start, |i, x, v, a| {
        if i % every == 0 || i == steps {
            trace.push(TracePoint { t: i as f64 * dt, x, v, a });
        }
    });
    Ok(trace)
}

fn run(p: &OscillatorParams, steps: usize, dt: f64, seed: u64, equilibrium_start: bool, mut visit: impl FnMut(usize, f64, f64, f64)) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w2 = p.omega * p.omega;
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let (mut x, mut v) = (p.alpha / w2, 0.0);
    if equilibrium_start {
        let sv = p.sigma / (2.0 * p.gamma).sqrt();
        x += sv / p.omega * normal();
        v = sv * normal();
    }
    let mut a = 0.0;
    let noise = p.sigma * dt.sqrt();
    visit(0, x, v, a);
    for i in 1..=steps {
        let dw = noise * normal();
        let nx = x + v * dt;
        let nv = v + (-p.gamma * v - w2 * x + p.alpha) * dt + dw;
        a += x * dt;
        x = nx;
        v = nv;
        visit(i, x, v, a);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloStats {
    pub runs: usize,
    pub t: f64,
    pub mean: f64,
    pub sd: f64,
    /// Standard error of the mean.
    pub mean_err: f64,
    /// Approximate standard error of the sd (normal theory).
    pub sd_err: f64,
    /// `mean² / sd²`.
    pub snr: f64,
}

/// Samples `A(t)/t` over `runs` independent equilibrium-started runs. Run
/// `k` uses seed `seed + k`.
pub fn monte_carlo(p: &OscillatorParams, t_end: f64, dt: f64, runs: usize, seed: u64) -> Result<MonteCarloStats> {
    let steps = check_step(p, dt, t_end)?;
    if runs < 2 || steps == 0 {
        return Err(Error::Config("Monte Carlo needs at least two runs and one step".into()));
    }
    let t = steps as f64 * dt;
    let values: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|k| {
            let mut last = 0.0;
            run(p, steps, dt, seed.wrapping_add(k as u64), true, |_, _, _, a| last = a);
            last / t
        })
        .collect();
    let n = runs as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    Ok(MonteCarloStats {
        runs,
        t,
        mean,
        sd,
        mean_err: sd / n.sqrt(),
        sd_err: sd / (2.0 * (n - 1.0)).sqrt(),
        snr: mean * mean / var,
    })
}

/// Per-sensor noise standard deviation implied by the single-sensor SNR.
pub fn sensor_noise_sd(design: &SensorDesign, temperature: f64, viscosity: f64) -> f64 {
    let snr = snr_single(design, temperature, viscosity);
    if snr.is_infinite() {
        0.0
    } else {
        design.stress.abs() / snr.sqrt()
    }
}

/// Adds independent Gaussian noise of sd `p/√SNR` to every sensor and
/// channel, then re-applies the zero-sum gauge to the normal channel.
pub fn perturb_readings(reading: &StressReading, design: &SensorDesign, temperature: f64, viscosity: f64, seed: u64) -> StressReading {
    let sd = sensor_noise_sd(design, temperature, viscosity);
    if sd == 0.0 {
        return reading.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = |v: &f64| -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        v + sd * z
    };
    let mut normal: Vec<f64> = reading.normal.iter().map(&mut noisy).collect();
    let tangential = reading.tangential.iter().map(&mut noisy).collect();
    gauge_normalize(&mut normal);
    StressReading { timestamp: reading.timestamp, normal, tangential }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_array_snr() {
        let snr = snr_array(&SensorDesign::reference(), 1e-6, 310.0, 1e-3);
        assert!((snr - 210.0).abs() < 0.05 * 210.0, "{snr}");
        assert!((decibels(snr) - 23.2).abs() < 0.1);
    }

    #[test]
    fn reference_damping_rate() {
        let p = OscillatorParams::from_design(&SensorDesign::reference(), 310.0, 1e-3, None);
        assert!((p.gamma - 3.8e7).abs() < 0.05e7, "{}", p.gamma);
        assert!((1.0 / p.gamma - 26e-9).abs() < 5e-9);
    }

    #[test]
    fn scalings() {
        let d = SensorDesign::reference();
        let s1 = snr_single(&d, 310.0, 1e-3);
        assert!((snr_single(&SensorDesign { time: 2.0 * d.time, ..d }, 310.0, 1e-3) / s1 - 2.0).abs() < 1e-12);
        let a = snr_array(&d, 1e-6, 310.0, 1e-3);
        assert!((snr_array(&SensorDesign { count: 4 * d.count, ..d }, 1e-6, 310.0, 1e-3) / a - 0.5).abs() < 1e-12);
        assert!(snr_array(&SensorDesign { coverage: 1e-12, ..d }, 1e-6, 310.0, 1e-3) < 1e-12);
        assert!((fluctuation_sigma(2.0, 1.0, 300.0) / fluctuation_sigma(1.0, 1.0, 300.0) - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(fluctuation_sigma(1.0, 1.0, 0.0), 0.0);
    }

    #[test]
    fn deterministic_oscillator_settles() {
        let p = OscillatorParams { gamma: 1.0, omega: 0.5, mass: 1.0, alpha: 0.3, sigma: 0.0 };
        let tr = simulate_oscillator(&p, 60.0, 1e-3, 1, false, 1000).unwrap();
        let last = tr.last().unwrap();
        assert!((last.x - 0.3 / 0.25).abs() < 1e-9);
        let tr = simulate_oscillator(&OscillatorParams { alpha: 0.0, ..p }, 200.0, 1e-3, 1, false, 1000).unwrap();
        assert!(tr.last().unwrap().x.abs() < 1e-12);
    }

    #[test]
    fn large_step_is_rejected() {
        let p = OscillatorParams { gamma: 1e7, omega: 5e6, mass: 1.0, alpha: 0.0, sigma: 1.0 };
        assert_eq!(simulate_oscillator(&p, 1e-6, 1e-7, 0, true, 1).unwrap_err().kind(), "step-failure");
    }

    #[test]
    fn zero_noise_leaves_reading() {
        let r = StressReading { timestamp: 0.0, normal: vec![1.0, -1.0, 0.5, -0.5], tangential: vec![0.1, 0.2, 0.3, 0.4] };
        assert_eq!(perturb_readings(&r, &SensorDesign::reference(), 0.0, 1e-3, 3), r);
        let noisy = perturb_readings(&r, &SensorDesign::reference(), 310.0, 1e-3, 3);
        assert_ne!(noisy, r);
        assert!(noisy.normal.iter().sum::<f64>().abs() < 1e-12);
        assert_eq!(noisy, perturb_readings(&r, &SensorDesign::reference(), 310.0, 1e-3, 3));
    }
}
