//! Estimators mapping stress features to the robot's position and motion in
//! the vessel, and the model parameters they use.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::features::{fourier_coefficients, principal_components, Channel, FourierFeatures, PcaModel, C64};
use crate::optimize::periodic_max;
use crate::physics::wrap_angle;
use crate::scenario::RobotShape;
use crate::solver::{Discretization, StressReading};

/// Logistic regression of relative position on `(p_1, p_2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionRegression {
    /// `[β_0, β_1, β_2]`
    pub beta: [f64; 3],
    pub std_err: [f64; 3],
}

impl PositionRegression {
    pub fn reference() -> Self {
        PositionRegression { beta: [-0.51, 3.3, -4.6], std_err: [0.09, 0.3, 1.1] }
    }

    pub fn linear(&self, p1: f64, p2: f64) -> f64 {
        self.beta[0] + self.beta[1] * p1 + self.beta[2] * p2
    }
}

/// Gamma GLM with log link for the vessel diameter, µm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterRegression {
    /// `[β_0, β_1, β_2, β_11, β_22, β_12]`
    pub beta: [f64; 6],
    pub std_err: [f64; 6],
}

impl DiameterRegression {
    pub fn reference() -> Self {
        DiameterRegression {
            beta: [1.66, 0.68, 4.05, 2.74, 11.0, -5.4],
            std_err: [0.01, 0.01, 0.06, 0.05, 0.4, 0.2],
        }
    }

    pub fn design(p1: f64, p2: f64) -> [f64; 6] {
        [1.0, p1, p2, p1 * p1, p2 * p2, p1 * p2]
    }
}

/// Linear fit of the speed ratio on the odds of the relative position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedRatioFit {
    pub a: f64,
    pub b: f64,
    pub a_err: f64,
    pub b_err: f64,
    /// Relative positions are clamped to at least this value.
    pub floor: f64,
}

impl SpeedRatioFit {
    pub fn reference() -> Self {
        SpeedRatioFit { a: 3.1, b: 5.41, a_err: 0.2, b_err: 0.03, floor: 0.01 }
    }
}

/// Provenance of a model set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub source: String,
    pub seed: Option<u64>,
    pub train_samples: usize,
    pub sensors: usize,
    pub discretization: Option<Discretization>,
    #[serde(default)]
    pub training_metrics: BTreeMap<String, f64>,
}

/// Everything the estimators need, fitted on one training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    pub version: u32,
    pub pca: PcaModel,
    pub position: PositionRegression,
    pub diameter: DiameterRegression,
    pub speed_ratio: SpeedRatioFit,
    /// Convex hull of the training `(p_1, p_2)`, counterclockwise.
    pub hull: Vec<[f64; 2]>,
    pub meta: ModelMeta,
}

const REFERENCE_JSON: &str = include_str!("../data/reference_models.json");

impl ModelSet {
    pub const VERSION: u32 = 1;

    /// Fixed reference coefficients. Their training means and feature hull
    /// come from the canonical regenerated training set.
    pub fn reference() -> ModelSet {
        serde_json::from_str(REFERENCE_JSON).expect("bundled reference models parse")
    }

    pub fn from_json(text: &str) -> Result<ModelSet> {
        let m: ModelSet = serde_json::from_str(text)?;
        if m.version != Self::VERSION {
            return Err(Error::ModelIncompatible(format!("model version {} (expected {})", m.version, Self::VERSION)));
        }
        m.pca.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("models serialize")
    }

    /// Whether `(p_1, p_2)` lies in the training hull expanded by 10% about
    /// its centroid.
    pub fn in_range(&self, p1: f64, p2: f64) -> bool {
        in_expanded_hull(&self.hull, [p1, p2], 1.1)
    }
}

/// Convex hull by monotone chain, counterclockwise, without collinear points.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.iter().filter(|p| p[0].is_finite() && p[1].is_finite()).cloned().collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn in_expanded_hull(hull: &[[f64; 2]], p: [f64; 2], factor: f64) -> bool {
    if hull.len() < 3 {
        return false;
    }
    let n = hull.len() as f64;
    let c = [hull.iter().map(|q| q[0]).sum::<f64>() / n, hull.iter().map(|q| q[1]).sum::<f64>() / n];
    // shrinking the query toward the centroid is the same as growing the hull
    let q = [c[0] + (p[0] - c[0]) / factor, c[1] + (p[1] - c[1]) / factor];
    (0..hull.len()).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) >= 0.0
    })
}

/// Numerical settings shared by the estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSettings {
    pub modes: usize,
    /// Coarse grid size for angular searches.
    pub grid: usize,
    /// Golden-section refinement tolerance, rad.
    pub tolerance: f64,
    /// Correlations below this flag the angular velocity as unreliable.
    pub min_correlation: f64,
    /// Shifts within this fraction of π are treated as aliased.
    pub alias_margin: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        EstimatorSettings { modes: 6, grid: 1024, tolerance: 1e-5, min_correlation: 0.99, alias_margin: 0.05 }
    }
}

/// Angle in `[0, 2π)` maximizing the magnitude of the interpolated
/// tangential stress.
pub fn estimate_wall_direction(features: &FourierFeatures, settings: &EstimatorSettings) -> Result<f64> {
    features.require_signal()?;
    let (theta, _) = periodic_max(|t| features.value(Channel::Tangential, t).abs(), 0.0, settings.grid, settings.tolerance);
    Ok(wrap_angle(theta))
}

/// Direction to the wall for a robot of the given shape: the outward normal
/// at the extreme-stress angle.
pub fn wall_direction(shape: &RobotShape, theta_extreme: f64) -> f64 {
    shape.normal_angle(theta_extreme)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionDirection {
    /// Body-frame direction of travel, rad in `[0, 2π)`.
    pub direction: f64,
    /// Sign of `d f_normal / dθ` at the extreme-stress angle.
    pub sign: i8,
    /// False when the slope is too small relative to the stress scale to
    /// trust its sign.
    pub confident: bool,
}

/// Travel is a quarter turn from the wall direction, on the side given by
/// the slope of the normal stress at `theta_extreme`.
pub fn estimate_motion_direction(features: &FourierFeatures, theta_extreme: f64, phi_wall: f64) -> Result<MotionDirection> {
    features.require_signal()?;
    let slope = features.derivative(Channel::Normal, theta_extreme);
    let sign: i8 = if slope < 0.0 { -1 } else { 1 };
    let confident = slope.abs() > 1e-6 * features.scale;
    Ok(MotionDirection { direction: wrap_angle(phi_wall - sign as f64 * FRAC_PI_2), sign, confident })
}

pub fn estimate_relative_position(p1: f64, p2: f64, model: &PositionRegression) -> f64 {
    let z = model.linear(p1, p2);
    // logistic without overflow for large |z|
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn estimate_diameter(p1: f64, p2: f64, model: &DiameterRegression) -> f64 {
    let x = DiameterRegression::design(p1, p2);
    x.iter().zip(&model.beta).map(|(a, b)| a * b).sum::<f64>().exp()
}

/// Center-to-wall distance implied by a relative position, diameter and
/// robot radius.
pub fn estimate_wall_distance(relpos: f64, diameter: f64, r: f64) -> Result<f64> {
    if !(diameter > 2.0 * r) {
        return Err(Error::InconsistentEstimates(format!("diameter {diameter} µm does not exceed 2r = {}", 2.0 * r)));
    }
    if !(0.0..=1.0).contains(&relpos) {
        return Err(Error::InconsistentEstimates(format!("relative position {relpos} outside [0, 1]")));
    }
    Ok(diameter / 2.0 - relpos * (diameter / 2.0 - r))
}

/// Speed ratio `a + b (1 − ρ)/ρ`, with `ρ` clamped to the fit's floor. The
/// flag reports whether the clamp was active.
pub fn estimate_speed_ratio(relpos: f64, fit: &SpeedRatioFit) -> (f64, bool) {
    let clamped = relpos <= fit.floor;
    let rho = relpos.max(fit.floor);
    (fit.a + fit.b * (1.0 - rho) / rho, clamped)
}

pub fn estimate_speed(omega: f64, ratio: f64, r: f64) -> f64 {
    omega.abs() * ratio * r
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularVelocity {
    pub omega: f64,
    pub shift_normal: f64,
    pub shift_tangential: f64,
    pub correlation_normal: f64,
    pub correlation_tangential: f64,
    /// The smaller of the two channel correlations.
    pub correlation: f64,
    pub reliable: bool,
    pub aliased: bool,
}

/// Pearson correlation between the interpolant `a(θ)` and `b(θ + Δ)` as a
/// function of `Δ`. For patterns limited to modes `≤ M` the correlation
/// sampled on any uniform grid finer than `2M + 1` points equals this
/// closed form.
fn shift_correlation(a: &[C64], b: &[C64]) -> Option<impl Fn(f64) -> f64> {
    let na: f64 = a[1..].iter().map(|c| c.norm_sqr()).sum();
    let nb: f64 = b[1..].iter().map(|c| c.norm_sqr()).sum();
    let denom = (na * nb).sqrt();
    if !(denom > 0.0) {
        return None;
    }
    let cross: Vec<C64> = a[1..].iter().zip(&b[1..]).map(|(x, y)| x.conj() * y).collect();
    Some(move |d: f64| {
        cross.iter().enumerate().map(|(i, c)| (c * C64::from_polar(1.0, -d * (i + 1) as f64)).re).sum::<f64>() / denom
    })
}

/// Shift in `[−π, π)` maximizing the correlation, with the maximum.
fn best_shift(a: &[C64], b: &[C64], settings: &EstimatorSettings) -> Result<(f64, f64)> {
    let corr = shift_correlation(a, b).ok_or_else(|| Error::DegenerateInput("stress channel has no variation".into()))?;
    let (d, c) = periodic_max(corr, -PI, settings.grid, settings.tolerance);
    Ok((d, c.min(1.0)))
}

/// Rotation rate from the shift of the stress pattern between two readings
/// `dt` seconds apart: `ω ≈ −Δθ / Δt`, averaging the normal and tangential
/// shifts.
pub fn estimate_angular_velocity(
    a: &StressReading,
    b: &StressReading,
    dt: f64,
    settings: &EstimatorSettings,
) -> Result<AngularVelocity> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time interval must be positive, got {dt}")));
    }
    if a.len() != b.len() {
        return Err(Error::DegenerateInput("readings have different sensor counts".into()));
    }
    let fa = fourier_coefficients(a, settings.modes)?;
    let fb = fourier_coefficients(b, settings.modes)?;
    angular_velocity_from_features(&fa, &fb, dt, settings)
}

pub fn angular_velocity_from_features(
    fa: &FourierFeatures,
    fb: &FourierFeatures,
    dt: f64,
    settings: &EstimatorSettings,
) -> Result<AngularVelocity> {
    let (dn, cn) = best_shift(&fa.normal, &fb.normal, settings)?;
    let (dtg, ct) = best_shift(&fa.tangential, &fb.tangential, settings)?;
    // keep the two shifts on the same branch before averaging
    let dtg_near = dn + crate::physics::angle_difference(dtg, dn);
    let shift = 0.5 * (dn + dtg_near);
    let limit = PI * (1.0 - settings.alias_margin);
    let aliased = dn.abs() >= limit || dtg.abs() >= limit;
    let correlation = cn.min(ct);
    Ok(AngularVelocity {
        omega: -shift / dt,
        shift_normal: dn,
        shift_tangential: dtg,
        correlation_normal: cn,
        correlation_tangential: ct,
        correlation,
        reliable: correlation >= settings.min_correlation && !aliased,
        aliased,
    })
}

/// All estimates from a pair of readings. Geometry refers to the first
/// reading; rates cover the interval between them. Fields that cannot be
/// computed are `None` and explained in `flags`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub theta_extreme: Option<f64>,
    pub wall_direction: Option<f64>,
    pub motion_direction: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub relpos: Option<f64>,
    pub diameter: Option<f64>,
    pub wall_distance: Option<f64>,
    pub angular_velocity: Option<f64>,
    pub speed_ratio: Option<f64>,
    pub speed: Option<f64>,
    pub correlation: Option<f64>,
    pub in_range: bool,
    pub flags: Vec<String>,
}

/// Runs every estimator. `shape` is the robot's own (known) geometry.
pub fn full_estimate(
    a: &StressReading,
    b: &StressReading,
    dt: f64,
    models: &ModelSet,
    shape: &RobotShape,
    settings: &EstimatorSettings,
) -> EstimateReport {
    let mut rep = estimate_geometry(a, models, shape, settings);
    // a reading without features has already been reported
    if rep.p1.is_some() || rep.theta_extreme.is_some() {
        estimate_rates(&mut rep, a, b, dt, shape, settings);
    }
    rep
}

/// The single-reading estimates: directions, relative position, diameter,
/// wall distance and speed ratio.
pub fn estimate_geometry(a: &StressReading, models: &ModelSet, shape: &RobotShape, settings: &EstimatorSettings) -> EstimateReport {
    let mut rep = EstimateReport::default();
    let flag = |rep: &mut EstimateReport, what: &str, e: &Error| rep.flags.push(format!("{what}: {}", e.kind()));
    let fa = match fourier_coefficients(a, settings.modes).and_then(|f| f.require_signal().map(|_| f)) {
        Ok(f) => f,
        Err(e) => {
            flag(&mut rep, "features", &e);
            return rep;
        }
    };

    let mut phi_wall = None;
    match estimate_wall_direction(&fa, settings) {
        Ok(theta) => {
            let phi = wall_direction(shape, theta);
            rep.theta_extreme = Some(theta);
            rep.wall_direction = Some(phi);
            phi_wall = Some(phi);
            match estimate_motion_direction(&fa, theta, phi) {
                Ok(m) => {
                    rep.motion_direction = Some(m.direction);
                    if !m.confident {
                        rep.flags.push("motion-direction: low-confidence".into());
                    }
                }
                Err(e) => flag(&mut rep, "motion-direction", &e),
            }
        }
        Err(e) => flag(&mut rep, "wall-direction", &e),
    }

    match principal_components(&fa, &models.pca) {
        Ok((p1, p2)) => {
            rep.p1 = Some(p1);
            rep.p2 = Some(p2);
            rep.in_range = models.in_range(p1, p2);
            if !rep.in_range {
                rep.flags.push("features: out-of-range".into());
            }
            let rho = estimate_relative_position(p1, p2, &models.position);
            let d = estimate_diameter(p1, p2, &models.diameter);
            rep.relpos = Some(rho);
            rep.diameter = Some(d);
            let radius = phi_wall.map_or(shape.equivalent_radius(), |phi| shape.support(phi));
            match estimate_wall_distance(rho, d, radius) {
                Ok(w) => rep.wall_distance = Some(w),
                Err(e) => flag(&mut rep, "wall-distance", &e),
            }
            let (ratio, clamped) = estimate_speed_ratio(rho, &models.speed_ratio);
            rep.speed_ratio = Some(ratio);
            if clamped {
                rep.flags.push("speed-ratio: unreliable-estimate".into());
            }
        }
        Err(e) => flag(&mut rep, "principal-components", &e),
    }
    rep
}

/// Adds angular velocity, correlation and speed from the pair `a → b` to a
/// report holding the speed ratio.
pub fn estimate_rates(
    rep: &mut EstimateReport,
    a: &StressReading,
    b: &StressReading,
    dt: f64,
    shape: &RobotShape,
    settings: &EstimatorSettings,
) {
    match estimate_angular_velocity(a, b, dt, settings) {
        Ok(av) => {
            rep.angular_velocity = Some(av.omega);
            rep.correlation = Some(av.correlation);
            if !av.reliable {
                rep.flags.push("angular-velocity: unreliable-estimate".into());
            }
            if let Some(ratio) = rep.speed_ratio {
                rep.speed = Some(estimate_speed(av.omega, ratio, shape.equivalent_radius()));
            }
        }
        Err(e) => rep.flags.push(format!("angular-velocity: {}", e.kind())),
    }
}
