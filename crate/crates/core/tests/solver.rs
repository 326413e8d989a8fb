use std::f64::consts::PI;

use stressnav::scenario::*;
use stressnav::solver::*;

fn disc() -> Discretization {
    Discretization::default()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}

#[test]
fn empty_channel_matches_poiseuille() {
    let (d, l, u) = (6.0, 12.0, 800.0);
    let vessel = VesselGeometry::straight(d, l);
    let field = solve_channel(&vessel, &FluidProperties::blood_plasma(), u, &disc()).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let x = l * (0.3 + 0.4 * i as f64 / 9.0);
            let y = 0.45 * d * (-1.0 + 2.0 * j as f64 / 9.0);
            let v = field.velocity(Vec2::new(x, y));
            let exact = u * (1.0 - (2.0 * y / d).powi(2));
            worst = worst.max((v.x - exact).abs() / exact).max(v.y.abs() / exact);
        }
    }
    assert!(worst < 0.01, "worst relative error {worst}");
}

#[test]
fn centered_robot_does_not_rotate() {
    let mut s = Scenario::table2();
    s.pose.y = 0.0;
    let sol = solve_flow(&s, &disc()).unwrap();
    let r = 1.0;
    assert!(sol.motion.omega.abs() < 1e-3 * s.inlet_u / r);
    assert!(sol.motion.vy.abs() < 1e-6 * s.inlet_u);
}

#[test]
fn table2_motion_and_residuals() {
    let s = Scenario::table2();
    let sol = solve_flow(&s, &disc()).unwrap();
    assert!((sol.motion.speed() - 530.0).abs() < 53.0, "speed {}", sol.motion.speed());
    assert!((sol.motion.omega + 150.0).abs() < 15.0, "omega {}", sol.motion.omega);
    let scale = s.fluid.viscosity * s.inlet_u * 1e-6;
    assert!(sol.residuals.net_force / scale < 1e-4);
    assert!(sol.residuals.net_torque / (scale * 1e-6) < 1e-4);
    assert!(sol.robot_panel_count() >= 64);
}

#[test]
fn table2_stress_range_and_wall_side() {
    let s = Scenario::table2();
    let sol = solve_flow(&s, &disc()).unwrap();
    let sensors = SensorArray::default();
    let reading = surface_traction(&sol, &sensors, &s.pose);
    let mags = reading.magnitudes();
    let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mags.iter().cloned().fold(0.0, f64::max);
    assert!((0.7..=0.9).contains(&lo) && (3.5..=4.3).contains(&hi), "range {lo}..{hi}");
    assert!(reading.normal.iter().sum::<f64>().abs() < 1e-12);

    // the wall is straight below the robot
    let wall_body = -PI / 2.0 - s.pose.psi;
    let jmax = (0..sensors.n)
        .max_by(|&a, &b| reading.tangential[a].abs().total_cmp(&reading.tangential[b].abs()))
        .unwrap();
    let sep = stressnav::physics::angle_difference(sensors.angle(jmax), wall_body).abs();
    assert!(sep <= PI / sensors.n as f64 + 1e-9, "max at sensor {jmax}, {sep} rad from wall");
}

#[test]
fn linear_in_speed_and_viscosity() {
    let s = Scenario::table2();
    let sensors = SensorArray::default();
    let base = solve_flow(&s, &disc()).unwrap();
    let r0 = surface_traction(&base, &sensors, &s.pose);

    let mut fast = s.clone();
    fast.inlet_u *= 2.5;
    let sol = solve_flow(&fast, &disc()).unwrap();
    let r = surface_traction(&sol, &sensors, &s.pose);
    assert!(rel_diff(&r.normal, &r0.scaled(2.5).normal) < 1e-6);
    assert!(rel_diff(&r.tangential, &r0.scaled(2.5).tangential) < 1e-6);
    assert!((sol.motion.omega / base.motion.omega - 2.5).abs() < 2.5e-6);
    assert!((sol.motion.vx / base.motion.vx - 2.5).abs() < 2.5e-6);

    let mut thick = s.clone();
    thick.fluid.viscosity *= 3.0;
    let sol = solve_flow(&thick, &disc()).unwrap();
    let r = surface_traction(&sol, &sensors, &s.pose);
    assert!(rel_diff(&r.normal, &r0.scaled(3.0).normal) < 1e-6);
    assert!(rel_diff(&r.tangential, &r0.scaled(3.0).tangential) < 1e-6);
    assert!((sol.motion.omega / base.motion.omega - 1.0).abs() < 1e-6);
    assert!((sol.motion.vx / base.motion.vx - 1.0).abs() < 1e-6);
}

#[test]
fn reflection_negates_rotation_and_mirrors_traction() {
    let s = Scenario::table2();
    let m = s.mirrored();
    let sensors = SensorArray::default();
    let a = solve_flow(&s, &disc()).unwrap();
    let b = solve_flow(&m, &disc()).unwrap();
    assert!((a.motion.omega + b.motion.omega).abs() < 1e-6 * a.motion.omega.abs());
    assert!((a.motion.vx - b.motion.vx).abs() < 1e-6 * a.motion.vx.abs());
    assert!((a.motion.vy + b.motion.vy).abs() < 1e-6 * a.motion.speed());
    let ra = surface_traction(&a, &sensors, &s.pose);
    let rb = surface_traction(&b, &sensors, &m.pose);
    // body angle θ maps to −θ; tangential direction flips
    let n = sensors.n;
    for j in 0..n {
        let k = (n - j) % n;
        assert!((ra.normal[j] - rb.normal[k]).abs() < 1e-6);
        assert!((ra.tangential[j] + rb.tangential[k]).abs() < 1e-6);
    }
}

#[test]
fn ambient_pressure_does_not_change_reading() {
    let s = Scenario::table2();
    let sol = solve_flow(&s, &disc()).unwrap();
    let r = surface_traction(&sol, &SensorArray::default(), &s.pose);
    let shifted: Vec<f64> = r.normal.iter().map(|v| v - 17.0).collect();
    let again = StressReading::from_raw(0.0, shifted, r.tangential.clone()).unwrap();
    for (a, b) in again.normal.iter().zip(&r.normal) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn end_effects_small_within_sampling_offsets() {
    for (d, y) in [(6.0, -1.5), (10.0, -1.0), (10.0, -3.5)] {
        let mut s = Scenario::table2();
        s.vessel = VesselGeometry::straight(d, 18.0);
        s.pose = RobotPose { x: 9.0, y, psi: 0.0 };
        let sensors = SensorArray::default();
        let center = surface_traction(&solve_flow(&s, &disc()).unwrap(), &sensors, &s.pose);
        let base: Vec<f64> = center.normal.iter().chain(&center.tangential).cloned().collect();
        for dx in [-2.0, 2.0] {
            let mut o = s.clone();
            o.pose.x += dx;
            let off = surface_traction(&solve_flow(&o, &disc()).unwrap(), &sensors, &o.pose);
            let v: Vec<f64> = off.normal.iter().chain(&off.tangential).cloned().collect();
            assert!(rel_diff(&v, &base) <= 0.01, "d {d} y {y} dx {dx}: {}", rel_diff(&v, &base));
        }
    }
}

#[test]
fn advance_zero_is_identity() {
    let s = Scenario::table2();
    assert_eq!(advance(&s, 0.0, &disc()).unwrap(), s);
    assert!(advance(&s, -1.0, &disc()).is_err());
}

#[test]
fn advance_table2_rotates_by_omega_dt() {
    let s = Scenario::table2();
    let omega = solve_flow(&s, &disc()).unwrap().motion.omega;
    let next = advance(&s, 5e-3, &disc()).unwrap();
    let dpsi = next.pose.psi - s.pose.psi;
    assert!((dpsi - omega * 5e-3).abs() < 0.01 * (omega * 5e-3).abs(), "dpsi {dpsi}");
    assert!((dpsi + 0.75).abs() < 0.075);
}

#[test]
fn co_moving_window_keeps_axial_position() {
    let mut s = Scenario::table2();
    s.vessel = VesselGeometry::straight(6.0, 18.0);
    s.pose.x = 9.0;
    let opts = AdvanceOptions { co_moving: true, ..Default::default() };
    let out = advance_with(&s, 5e-3, &disc(), &opts).unwrap();
    assert_eq!(out.scenario.pose.x, 9.0);
    assert!(out.displacement[0] > 2.0);
    assert!((out.rotation - (out.scenario.pose.psi - s.pose.psi)).abs() < 1e-15);
}

#[test]
fn advance_into_wall_is_geometry_violation() {
    let mut s = Scenario::table2();
    s.pose.x = 9.5;
    let err = advance(&s, 5e-3, &disc()).unwrap_err();
    assert_eq!(err.kind(), "geometry-violation");
}

#[test]
fn profile_scan_trends() {
    let s = Scenario::table2();
    let ys = [0.0, -0.4, -0.8, -1.2, -1.6, 0.8, 2.5];
    let rows = speed_profile_scan(&s, &ys, &disc());
    assert!(rows[0].omega.unwrap().abs() < 1e-6);
    for w in rows[..5].windows(2) {
        assert!(w[1].speed.unwrap() < w[0].speed.unwrap());
        assert!(w[1].omega.unwrap().abs() > w[0].omega.unwrap().abs());
    }
    assert!((rows[5].speed.unwrap() - rows[2].speed.unwrap()).abs() < 1e-6 * rows[2].speed.unwrap());
    assert!((rows[5].omega.unwrap() + rows[2].omega.unwrap()).abs() < 1e-6 * rows[2].omega.unwrap().abs());
    assert!(rows[6].error.is_some());
}

#[test]
fn reversed_flow_negates_motion() {
    let s = Scenario::table2();
    let mut r = s.clone();
    r.inlet_u = -s.inlet_u;
    let a = solve_flow(&s, &disc()).unwrap();
    let b = solve_flow(&r, &disc()).unwrap();
    assert!((a.motion.omega + b.motion.omega).abs() < 1e-3 * a.motion.omega.abs());
    assert!((a.motion.vx + b.motion.vx).abs() < 1e-3 * a.motion.vx.abs());
}
