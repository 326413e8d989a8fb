//! Test-set error statistics, stratified by relative position.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{Dataset, Split};
use crate::error::{Error, Result};
use crate::estimators::{
    angular_velocity_from_features, estimate_diameter, estimate_motion_direction, estimate_relative_position,
    estimate_speed, estimate_speed_ratio, estimate_wall_direction, estimate_wall_distance, wall_direction,
    EstimatorSettings, ModelSet,
};
use crate::features::{fourier_coefficients, principal_components};
use crate::physics::angle_difference;

/// Relative-position bins: `< 0.2`, `[0.2, 0.5)`, `≥ 0.5`.
pub const STRATUM_LABELS: [&str; 3] = ["relpos<0.2", "0.2<=relpos<0.5", "relpos>=0.5"];

pub fn stratum(relpos: f64) -> usize {
    if relpos < 0.2 {
        0
    } else if relpos < 0.5 {
        1
    } else {
        2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub rms: f64,
    pub mean_abs: f64,
    pub max_abs: f64,
    pub mean_rel: Option<f64>,
    pub median_rel: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl ErrorStats {
    /// Statistics of `(predicted, actual)` pairs; `errors` are the signed
    /// differences (which may be wrapped angles).
    fn new(rows: &[&ScatterRow], relative: bool) -> Option<ErrorStats> {
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        let err: Vec<f64> = rows.iter().map(|r| r.error).collect();
        let (rel_mean, rel_median) = if relative {
            let rel: Vec<f64> = rows.iter().map(|r| (r.error / r.actual).abs()).collect();
            (Some(rel.iter().sum::<f64>() / n), Some(median(rel)))
        } else {
            (None, None)
        };
        Some(ErrorStats {
            count: rows.len(),
            rms: (err.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
            mean_abs: err.iter().map(|e| e.abs()).sum::<f64>() / n,
            max_abs: err.iter().fold(0.0, |a, e| a.max(e.abs())),
            mean_rel: rel_mean,
            median_rel: rel_median,
        })
    }
}

/// Overall statistics plus one entry per relative-position stratum (absent
/// when the stratum is empty).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stratified {
    pub all: Option<ErrorStats>,
    pub strata: Vec<Option<ErrorStats>>,
}

impl Stratified {
    fn new(rows: &[ScatterRow], relative: bool) -> Stratified {
        let all: Vec<&ScatterRow> = rows.iter().collect();
        let strata = (0..3)
            .map(|k| ErrorStats::new(&rows.iter().filter(|r| r.stratum == k).collect::<Vec<_>>(), relative))
            .collect();
        Stratified { all: ErrorStats::new(&all, relative), strata }
    }
}

/// One predicted/actual pair for the scatter exports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub id: usize,
    pub predicted: f64,
    pub actual: f64,
    pub error: f64,
    pub relpos: f64,
    pub stratum: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub test_samples: usize,
    pub strata: Vec<String>,
    pub stratum_counts: Vec<usize>,
    /// Degrees.
    pub wall_direction: Stratified,
    /// Degrees.
    pub motion_direction: Stratified,
    pub relpos: Stratified,
    /// µm.
    pub diameter: Stratified,
    /// µm.
    pub wall_distance: Stratified,
    /// rad/s, over test samples with a later reading.
    pub angular_velocity: Stratified,
    pub min_correlation: Option<f64>,
    pub unreliable_angular_velocity: usize,
    /// Fitted ratio at the true relative position.
    pub speed_ratio: Stratified,
    /// Ratio at the estimated relative position, as used for speed.
    pub speed_ratio_estimated: Stratified,
    /// µm/s.
    pub speed: Stratified,
    pub out_of_range: usize,
    pub model_source: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    /// Scatter rows keyed by quantity name.
    pub scatter: BTreeMap<String, Vec<ScatterRow>>,
}

/// Runs every estimator on the test split and compares with the labels.
pub fn evaluate(models: &ModelSet, data: &Dataset, settings: &EstimatorSettings) -> Result<Evaluation> {
    let test: Vec<_> = data.split(Split::Test).collect();
    if test.is_empty() {
        return Err(Error::DegenerateDataset("no test samples".into()));
    }
    let mut rows: BTreeMap<&str, Vec<ScatterRow>> = BTreeMap::new();
    let mut counts = vec![0; 3];
    let mut min_corr: Option<f64> = None;
    let mut unreliable = 0;
    let mut out_of_range = 0;
    for s in &test {
        let l = &s.labels;
        let k = stratum(l.relpos);
        counts[k] += 1;
        let mut push = |name: &'static str, predicted: f64, actual: f64, error: f64| {
            rows.entry(name).or_default().push(ScatterRow { id: s.id, predicted, actual, error, relpos: l.relpos, stratum: k });
        };
        let f = fourier_coefficients(&s.reading, settings.modes)?;
        let theta = estimate_wall_direction(&f, settings)?;
        let phi = wall_direction(&s.scenario.shape, theta);
        let motion = estimate_motion_direction(&f, theta, phi)?;
        let deg = f64::to_degrees;
        push("wall_direction", deg(phi), deg(l.wall_direction), deg(angle_difference(phi, l.wall_direction)));
        push(
            "motion_direction",
            deg(motion.direction),
            deg(l.motion_direction),
            deg(angle_difference(motion.direction, l.motion_direction)),
        );
        let (p1, p2) = principal_components(&f, &models.pca)?;
        if !models.in_range(p1, p2) {
            out_of_range += 1;
        }
        let rho = estimate_relative_position(p1, p2, &models.position);
        let d = estimate_diameter(p1, p2, &models.diameter);
        let r = s.scenario.shape.support(phi);
        push("relpos", rho, l.relpos, rho - l.relpos);
        push("diameter", d, l.diameter, d - l.diameter);
        if let Ok(w) = estimate_wall_distance(rho, d, r) {
            push("wall_distance", w, l.wall_distance, w - l.wall_distance);
        }
        let (ratio_true, _) = estimate_speed_ratio(l.relpos, &models.speed_ratio);
        push("speed_ratio", ratio_true, l.speed_ratio, ratio_true - l.speed_ratio);
        let (ratio, _) = estimate_speed_ratio(rho, &models.speed_ratio);
        push("speed_ratio_estimated", ratio, l.speed_ratio, ratio - l.speed_ratio);
        if let Some(later) = &s.later {
            let fb = fourier_coefficients(&later.reading, settings.modes)?;
            let av = angular_velocity_from_features(&f, &fb, later.dt, settings)?;
            min_corr = Some(min_corr.map_or(av.correlation, |c| c.min(av.correlation)));
            if !av.reliable {
                unreliable += 1;
            }
            push("angular_velocity", av.omega, later.omega, av.omega - later.omega);
            let v = estimate_speed(av.omega, ratio, s.scenario.shape.equivalent_radius());
            push("speed", v, l.speed, v - l.speed);
        }
    }
    let get = |name: &str, relative: bool| Stratified::new(rows.get(name).map_or(&[][..], |v| &v[..]), relative);
    let report = MetricsReport {
        test_samples: test.len(),
        strata: STRATUM_LABELS.iter().map(|s| s.to_string()).collect(),
        stratum_counts: counts,
        wall_direction: get("wall_direction", false),
        motion_direction: get("motion_direction", false),
        relpos: get("relpos", false),
        diameter: get("diameter", true),
        wall_distance: get("wall_distance", true),
        angular_velocity: get("angular_velocity", true),
        min_correlation: min_corr,
        unreliable_angular_velocity: unreliable,
        speed_ratio: get("speed_ratio", true),
        speed_ratio_estimated: get("speed_ratio_estimated", true),
        speed: get("speed", true),
        out_of_range,
        model_source: models.meta.source.clone(),
    };
    let scatter = rows.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    Ok(Evaluation { report, scatter })
}
