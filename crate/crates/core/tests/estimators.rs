use std::f64::consts::{FRAC_PI_2, PI, TAU};

use stressnav::estimators::*;
use stressnav::features::*;
use stressnav::physics::{angle_difference, relative_position};
use stressnav::scenario::*;
use stressnav::solver::*;

fn reading_from(fun: impl Fn(f64) -> (f64, f64), n: usize) -> StressReading {
    let (normal, tangential) = (0..n).map(|j| fun(TAU * j as f64 / n as f64)).unzip();
    StressReading { timestamp: 0.0, normal, tangential }
}

fn settings() -> EstimatorSettings {
    EstimatorSettings::default()
}

#[test]
fn reference_coefficients() {
    let rho = estimate_relative_position(0.0, 0.0, &PositionRegression::reference());
    assert!((rho - 1.0 / (1.0 + 0.51f64.exp())).abs() < 1e-12);
    assert!((rho - 0.3752).abs() < 1e-4);
    let d = estimate_diameter(0.0, 0.0, &DiameterRegression::reference());
    assert!((d - 1.66f64.exp()).abs() < 1e-12);
    assert!((d - 5.259).abs() < 1e-3);
    let (r, clamped) = estimate_speed_ratio(0.5, &SpeedRatioFit::reference());
    assert_eq!(r, 3.1 + 5.41);
    assert!(!clamped);
    let (r, _) = estimate_speed_ratio(1.0, &SpeedRatioFit::reference());
    assert_eq!(r, 3.1);
    let (_, clamped) = estimate_speed_ratio(0.001, &SpeedRatioFit::reference());
    assert!(clamped);
}

#[test]
fn logistic_and_glm_saturate_safely() {
    let m = PositionRegression::reference();
    assert_eq!(estimate_relative_position(-1e6, 0.0, &m), 0.0);
    assert_eq!(estimate_relative_position(1e6, 0.0, &m), 1.0);
    let inside = estimate_relative_position(0.3, -0.2, &m);
    assert!(inside > 0.0 && inside < 1.0);
    assert!(estimate_diameter(-5.0, 3.0, &DiameterRegression::reference()) > 0.0);
}

#[test]
fn wall_distance_round_trip() {
    assert_eq!(estimate_wall_distance(1.0, 7.0, 1.0).unwrap(), 1.0);
    assert_eq!(estimate_wall_distance(0.0, 6.0, 1.0).unwrap(), 3.0);
    assert_eq!(estimate_wall_distance(0.5, 2.0, 1.0).unwrap_err().kind(), "inconsistent-estimates");
    for (y, d) in [(1.7, 6.0), (-0.3, 5.0), (3.9, 10.0), (0.0, 8.0)] {
        let rho = relative_position(y, d, 1.0).unwrap();
        let w = estimate_wall_distance(rho, d, 1.0).unwrap();
        assert!((w - (d / 2.0 - f64::abs(y))).abs() < 1e-12);
    }
    assert_eq!(estimate_speed(0.0, 4.0, 1.0), 0.0);
    assert!((estimate_speed(150.0, 3.533, 1.0) - 529.95).abs() < 1e-9);
}

#[test]
fn mode_one_tie_takes_smallest_angle() {
    let theta0 = 2.0;
    let r = reading_from(|t| ((t - theta0).sin(), (t - theta0).cos()), 30);
    let f = fourier_coefficients(&r, 6).unwrap();
    let th = estimate_wall_direction(&f, &settings()).unwrap();
    assert!((th - theta0).abs() < 1e-4, "{th}");
}

#[test]
fn synthetic_slope_sign() {
    let th = 1.0;
    let r = reading_from(|t| (-(t - th).sin(), (t - th).cos() + 0.3 * (2.0 * t).cos()), 30);
    let f = fourier_coefficients(&r, 6).unwrap();
    let m = estimate_motion_direction(&f, th, th).unwrap();
    assert_eq!(m.sign, -1);
    assert!((m.direction - (th + FRAC_PI_2)).abs() < 1e-12);
    assert!(m.confident);
}

#[test]
fn rigid_rotation_gives_exact_rate() {
    let base = |t: f64| ((2.0 * t).cos() + 0.4 * (t + 0.3).sin(), 0.7 * (2.0 * t + 1.0).sin() - 0.2 * (3.0 * t).cos());
    let a = reading_from(base, 30);
    // b(θ) = a(θ + 0.75): the pattern moved by −0.75 rad
    let b = reading_from(|t| base(t + 0.75), 30);
    let av = estimate_angular_velocity(&a, &b, 5e-3, &settings()).unwrap();
    assert!((av.omega - 150.0).abs() < 2e-3, "{av:?}");
    assert!(av.correlation > 1.0 - 1e-9);
    assert!(av.reliable && !av.aliased);

    let same = estimate_angular_velocity(&a, &a, 5e-3, &settings()).unwrap();
    assert!(same.omega.abs() < 2e-3);

    let far = reading_from(|t| base(t + 0.99 * PI), 30);
    let av = estimate_angular_velocity(&a, &far, 5e-3, &settings()).unwrap();
    assert!(av.aliased && !av.reliable);
    assert!(estimate_angular_velocity(&a, &b, 0.0, &settings()).is_err());
}

#[test]
fn hull_and_range() {
    let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.2, 0.9]];
    let hull = convex_hull(&pts);
    assert_eq!(hull.len(), 4);
    let mut models = ModelSet::reference();
    models.hull = hull;
    assert!(models.in_range(0.5, 0.5));
    assert!(models.in_range(1.04, 0.5));
    assert!(!models.in_range(1.2, 0.5));
    assert!(!models.in_range(50.0, -50.0));
}

#[test]
fn zero_readings_flag_everything() {
    let z = StressReading { timestamp: 0.0, normal: vec![0.0; 30], tangential: vec![0.0; 30] };
    let rep = full_estimate(&z, &z, 5e-3, &ModelSet::reference(), &RobotShape::Circle { r: 1.0 }, &settings());
    assert!(rep.theta_extreme.is_none() && rep.relpos.is_none() && rep.angular_velocity.is_none() && rep.speed.is_none());
    assert!(!rep.in_range);
    assert!(!rep.flags.is_empty());
}

fn table2_pair(psi: f64, u: f64) -> (Scenario, StressReading, StressReading, RigidMotion) {
    let disc = Discretization::default();
    let mut s = Scenario::table2();
    s.vessel = VesselGeometry::straight(6.0, 18.0);
    s.pose.x = 9.0;
    s.pose.psi = psi;
    s.inlet_u = u;
    let sensors = SensorArray::default();
    let sol = solve_flow(&s, &disc).unwrap();
    let a = surface_traction(&sol, &sensors, &s.pose);
    let opts = AdvanceOptions { co_moving: true, ..Default::default() };
    let next = advance_with(&s, 5e-3, &disc, &opts).unwrap().scenario;
    let b = surface_traction(&solve_flow(&next, &disc).unwrap(), &sensors, &next.pose);
    (s, a, b, sol.motion)
}

#[test]
fn table2_directions_and_rate() {
    let (s, a, b, motion) = table2_pair(0.3, 1000.0);
    let f = fourier_coefficients(&a, 6).unwrap();
    // mode 2 dominates both channels
    let rel = &f.relative;
    assert!((0..6).all(|k| rel[1] >= rel[k]) && (6..12).all(|k| rel[7] >= rel[k]));
    let rep = full_estimate(&a, &b, 5e-3, &ModelSet::reference(), &s.shape, &settings());
    let wall = -FRAC_PI_2 - s.pose.psi;
    let travel = motion.vy.atan2(motion.vx) - s.pose.psi;
    assert!(angle_difference(rep.wall_direction.unwrap(), wall).abs() < 1f64.to_radians());
    assert!(angle_difference(rep.motion_direction.unwrap(), travel).abs() < 1f64.to_radians());
    assert!((rep.angular_velocity.unwrap() - motion.omega).abs() < 0.01 * motion.omega.abs());
    assert!(rep.correlation.unwrap() > 0.999);

    // reversing the flow flips the slope sign and the travel direction
    let (_, ar, _, _) = table2_pair(0.3, -1000.0);
    let fr = fourier_coefficients(&ar, 6).unwrap();
    let th = estimate_wall_direction(&fr, &settings()).unwrap();
    let m = estimate_motion_direction(&fr, th, th).unwrap();
    let m0 = estimate_motion_direction(&f, rep.theta_extreme.unwrap(), rep.theta_extreme.unwrap()).unwrap();
    assert_eq!(m.sign, -m0.sign);
    assert!((angle_difference(m.direction, m0.direction).abs() - PI).abs() < 1f64.to_radians());
}

#[test]
fn orientation_equivariance() {
    let disc = Discretization::default();
    let sensors = SensorArray::default();
    let mut s = Scenario::table2();
    let a = surface_traction(&solve_flow(&s, &disc).unwrap(), &sensors, &s.pose);
    let delta = 0.9;
    s.pose.psi += delta;
    let b = surface_traction(&solve_flow(&s, &disc).unwrap(), &sensors, &s.pose);
    let fa = fourier_coefficients(&a, 6).unwrap();
    let fb = fourier_coefficients(&b, 6).unwrap();
    let ta = estimate_wall_direction(&fa, &settings()).unwrap();
    let tb = estimate_wall_direction(&fb, &settings()).unwrap();
    assert!(angle_difference(tb, ta - delta).abs() < 0.5f64.to_radians());
    let models = ModelSet::reference();
    let pa = principal_components(&fa, &models.pca).unwrap();
    let pb = principal_components(&fb, &models.pca).unwrap();
    // sensors sample the rotated pattern at different points, so invariance
    // holds to the interpolation accuracy of the sensor array
    assert!((pa.0 - pb.0).abs() < 5e-3 && (pa.1 - pb.1).abs() < 5e-3, "{pa:?} {pb:?}");
}

#[test]
fn flow_speed_scaling() {
    let disc = Discretization::default();
    let sensors = SensorArray::default();
    let s = Scenario::table2();
    let a = surface_traction(&solve_flow(&s, &disc).unwrap(), &sensors, &s.pose);
    let mut fast = s.clone();
    fast.inlet_u *= 3.0;
    let b = surface_traction(&solve_flow(&fast, &disc).unwrap(), &sensors, &fast.pose);
    let models = ModelSet::reference();
    let ra = full_estimate(&a, &a, 5e-3, &models, &s.shape, &settings());
    let rb = full_estimate(&b, &b, 5e-3, &models, &s.shape, &settings());
    for (x, y) in [(ra.wall_direction, rb.wall_direction), (ra.relpos, rb.relpos), (ra.diameter, rb.diameter), (ra.wall_distance, rb.wall_distance)] {
        assert!((x.unwrap() - y.unwrap()).abs() < 1e-9);
    }
}
