//! Flow scenarios: fluid, vessel walls, robot shape and pose, inlet speed.
//!
//! Lengths are micrometers, speeds µm/s, angles radians (counterclockwise
//! positive). Fluid properties stay in SI; viscosity in Pa·s is consistent
//! with micrometer lengths because stresses come out in Pa either way.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::physics;

pub type Vec2 = Vector2<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluidProperties {
    /// kg/m³
    #[serde(rename = "rho")]
    pub density: f64,
    /// Pa·s
    #[serde(rename = "eta")]
    pub viscosity: f64,
    /// K
    #[serde(rename = "T")]
    pub temperature: f64,
}

impl FluidProperties {
    /// Water-like plasma at body temperature.
    pub fn blood_plasma() -> Self {
        FluidProperties { density: 1e3, viscosity: 1e-3, temperature: 310.0 }
    }

    /// m²/s
    pub fn kinematic_viscosity(&self) -> f64 {
        self.viscosity / self.density
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.viscosity > 0.0 && self.temperature > 0.0) {
            return Err(Error::Config(format!("fluid properties must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VesselKind {
    Straight,
    #[serde(alias = "parametric-walled")]
    Walled,
}

/// Wall polylines, both ordered from the inlet end to the outlet end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Walls {
    pub lower: Vec<[f64; 2]>,
    pub upper: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VesselGeometry {
    pub kind: VesselKind,
    /// Diameter of a straight vessel; nominal inlet width for walled vessels.
    pub d: f64,
    /// Segment length (straight); centerline length (walled, informational).
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walls: Option<Walls>,
}

impl VesselGeometry {
    pub fn straight(diameter: f64, length: f64) -> Self {
        VesselGeometry { kind: VesselKind::Straight, d: diameter, length, walls: None }
    }

    /// Lower and upper wall paths from inlet to outlet.
    pub fn wall_paths(&self) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
        match self.kind {
            VesselKind::Straight => {
                let h = self.d / 2.0;
                Ok((
                    vec![Vec2::new(0.0, -h), Vec2::new(self.length, -h)],
                    vec![Vec2::new(0.0, h), Vec2::new(self.length, h)],
                ))
            }
            VesselKind::Walled => {
                let walls = self.walls.as_ref().ok_or_else(|| {
                    Error::Config("walled vessel requires a `walls` object".into())
                })?;
                let conv = |p: &Vec<[f64; 2]>| p.iter().map(|q| Vec2::new(q[0], q[1])).collect();
                Ok((conv(&walls.lower), conv(&walls.upper)))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.length > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "vessel diameter and length must be positive (d={}, L={})",
                self.d, self.length
            )));
        }
        let (lower, upper) = self.wall_paths()?;
        if lower.len() < 2 || upper.len() < 2 {
            return Err(Error::InvalidGeometry("each wall needs at least two points".into()));
        }
        if lower.iter().chain(&upper).any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidGeometry("wall coordinates must be finite".into()));
        }
        for a in lower.windows(2) {
            for b in upper.windows(2) {
                if segments_intersect(a[0], a[1], b[0], b[1]) {
                    return Err(Error::InvalidGeometry("vessel walls intersect".into()));
                }
            }
        }
        Ok(())
    }

    /// Closed outer boundary, counterclockwise for a vessel running left to
    /// right: lower wall, outlet, upper wall reversed, inlet.
    pub fn outline(&self) -> Result<Vec<Vec2>> {
        let (lower, upper) = self.wall_paths()?;
        let mut loop_pts = lower.clone();
        loop_pts.extend(upper.iter().rev());
        Ok(loop_pts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RobotShape {
    Circle { r: f64 },
    /// Semi-axes with `a >= b`; the front lies along the major axis.
    Ellipse { a: f64, b: f64 },
}

impl RobotShape {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RobotShape::Circle { r } if r > 0.0 => Ok(()),
            RobotShape::Ellipse { a, b } if b > 0.0 && a >= b => Ok(()),
            other => Err(Error::InvalidGeometry(format!("invalid robot shape {other:?}"))),
        }
    }

    /// Ellipse with the same area as a circle of radius `r`.
    pub fn ellipse_equal_area(a: f64, r: f64) -> Self {
        RobotShape::Ellipse { a, b: r * r / a }
    }

    /// Body-frame boundary point at parametric angle `t`.
    pub fn boundary_point(&self, t: f64) -> Vec2 {
        match *self {
            RobotShape::Circle { r } => Vec2::new(r * t.cos(), r * t.sin()),
            RobotShape::Ellipse { a, b } => Vec2::new(a * t.cos(), b * t.sin()),
        }
    }

    /// Distance from the center to the boundary along body polar angle `theta`.
    pub fn polar_radius(&self, theta: f64) -> f64 {
        match *self {
            RobotShape::Circle { r } => r,
            RobotShape::Ellipse { a, b } => {
                let (s, c) = theta.sin_cos();
                1.0 / ((c / a).powi(2) + (s / b).powi(2)).sqrt()
            }
        }
    }

    /// Body-frame direction of the outward surface normal at polar angle `theta`.
    pub fn normal_angle(&self, theta: f64) -> f64 {
        match *self {
            RobotShape::Circle { .. } => physics::wrap_angle(theta),
            RobotShape::Ellipse { a, b } => {
                physics::wrap_angle((theta.sin() / (b * b)).atan2(theta.cos() / (a * a)))
            }
        }
    }

    /// Support distance: how far the boundary reaches along body direction
    /// `phi`. This is the center-to-wall distance at contact for a wall
    /// perpendicular to `phi`.
    pub fn support(&self, phi: f64) -> f64 {
        match *self {
            RobotShape::Circle { r } => r,
            RobotShape::Ellipse { a, b } => {
                ((a * phi.cos()).powi(2) + (b * phi.sin()).powi(2)).sqrt()
            }
        }
    }

    pub fn max_extent(&self) -> f64 {
        match *self {
            RobotShape::Circle { r } => r,
            RobotShape::Ellipse { a, .. } => a,
        }
    }

    /// Radius of the circle with the same area.
    pub fn equivalent_radius(&self) -> f64 {
        match *self {
            RobotShape::Circle { r } => r,
            RobotShape::Ellipse { a, b } => (a * b).sqrt(),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match *self {
            RobotShape::Circle { r } => TAU * r,
            RobotShape::Ellipse { a, b } => {
                // Ramanujan's second approximation
                let h = ((a - b) / (a + b)).powi(2);
                PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotPose {
    pub x: f64,
    pub y: f64,
    /// Angle of the robot front from the x-axis.
    pub psi: f64,
}

impl RobotPose {
    pub fn center(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn to_lab(&self, body: Vec2) -> Vec2 {
        let (s, c) = self.psi.sin_cos();
        self.center() + Vec2::new(c * body.x - s * body.y, s * body.x + c * body.y)
    }

    pub fn to_body(&self, lab: Vec2) -> Vec2 {
        let (s, c) = self.psi.sin_cos();
        let d = lab - self.center();
        Vec2::new(c * d.x + s * d.y, -s * d.x + c * d.y)
    }
}

/// Rigid-body motion: translation in µm/s and rotation in rad/s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl RigidMotion {
    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

/// One complete flow problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    pub fluid: FluidProperties,
    pub vessel: VesselGeometry,
    pub shape: RobotShape,
    pub pose: RobotPose,
    /// Maximum inlet speed, µm/s; the sign selects the flow direction
    /// (positive flows from the inlet end toward the outlet end).
    pub inlet_u: f64,
}

/// Reynolds number above which a scenario is flagged.
pub const REYNOLDS_WARNING: f64 = 0.1;

impl Scenario {
    /// The example configuration with the robot 1.7 µm below the axis of a
    /// 6 µm vessel and flow to the right, which gives clockwise rotation.
    pub fn table2() -> Self {
        Scenario {
            fluid: FluidProperties::blood_plasma(),
            vessel: VesselGeometry::straight(6.0, 10.0),
            shape: RobotShape::Circle { r: 1.0 },
            pose: RobotPose { x: 5.0, y: -1.7, psi: 0.3 },
            inlet_u: 1000.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fluid.validate()?;
        self.vessel.validate()?;
        self.shape.validate()?;
        if !(self.inlet_u.is_finite() && self.pose.x.is_finite() && self.pose.y.is_finite()
            && self.pose.psi.is_finite())
        {
            return Err(Error::Config("pose and inlet speed must be finite".into()));
        }
        let gap = self.min_gap()?;
        if !(gap > 0.0) {
            return Err(Error::GeometryViolation(format!(
                "robot overlaps the vessel boundary (gap {gap:.4} µm)"
            )));
        }
        let re = self.reynolds();
        if re > REYNOLDS_WARNING {
            log::warn!("scenario Reynolds number {re:.3} exceeds {REYNOLDS_WARNING}");
        }
        Ok(())
    }

    /// Reynolds number from inlet speed and vessel diameter.
    pub fn reynolds(&self) -> f64 {
        physics::reynolds(
            self.inlet_u.abs() / physics::MICRONS_PER_METER,
            self.vessel.d / physics::MICRONS_PER_METER,
            self.fluid.kinematic_viscosity(),
        )
    }

    /// Dense lab-frame sampling of the robot boundary.
    pub fn robot_outline(&self, count: usize) -> Vec<Vec2> {
        (0..count)
            .map(|k| self.pose.to_lab(self.shape.boundary_point(TAU * k as f64 / count as f64)))
            .collect()
    }

    /// Minimum distance between the robot surface and the vessel boundary
    /// (walls, inlet and outlet). Negative or zero when the robot overlaps or
    /// lies outside the vessel.
    pub fn min_gap(&self) -> Result<f64> {
        let outline = self.vessel.outline()?;
        let center = self.pose.center();
        if !point_in_polygon(center, &outline) {
            return Ok(-1.0);
        }
        let edges = closed_edges(&outline);
        let gap = match self.shape {
            RobotShape::Circle { r } => {
                edges.iter().map(|(a, b)| point_segment_distance(center, *a, *b)).fold(f64::INFINITY, f64::min) - r
            }
            RobotShape::Ellipse { .. } => {
                let pts = self.robot_outline(720);
                let mut gap = f64::INFINITY;
                for p in &pts {
                    if !point_in_polygon(*p, &outline) {
                        return Ok(-1.0);
                    }
                    for (a, b) in &edges {
                        gap = gap.min(point_segment_distance(*p, *a, *b));
                    }
                }
                gap
            }
        };
        Ok(gap)
    }

    /// Nearest point on either wall to the robot center, returned with the
    /// center-to-wall distance.
    pub fn nearest_wall_point(&self) -> Result<(Vec2, f64)> {
        let (lower, upper) = self.vessel.wall_paths()?;
        let c = self.pose.center();
        let mut best = (c, f64::INFINITY);
        for path in [&lower, &upper] {
            for w in path.windows(2) {
                let q = closest_point_on_segment(c, w[0], w[1]);
                let dist = (q - c).norm();
                if dist < best.1 {
                    best = (q, dist);
                }
            }
        }
        Ok(best)
    }

    /// Distances from the robot center to the lower and upper walls.
    pub fn wall_distances(&self) -> Result<(f64, f64)> {
        let (lower, upper) = self.vessel.wall_paths()?;
        let c = self.pose.center();
        let dist = |path: &Vec<Vec2>| {
            path.windows(2).map(|w| point_segment_distance(c, w[0], w[1])).fold(f64::INFINITY, f64::min)
        };
        Ok((dist(&lower), dist(&upper)))
    }

    /// Local vessel width at the robot: distance to the lower wall plus
    /// distance to the upper wall. Equals `d` for straight vessels.
    pub fn local_diameter(&self) -> Result<f64> {
        let (lo, up) = self.wall_distances()?;
        Ok(lo + up)
    }

    /// Relative position measured against the local width, with the center
    /// offset taken as half the difference of the two wall distances.
    pub fn local_relative_position(&self) -> Result<f64> {
        let (lo, up) = self.wall_distances()?;
        physics::relative_position((up - lo) / 2.0, lo + up, self.shape.equivalent_radius())
    }

    /// Whether `p` lies in the fluid: inside the vessel and outside the robot.
    pub fn in_fluid(&self, p: Vec2) -> Result<bool> {
        if !point_in_polygon(p, &self.vessel.outline()?) {
            return Ok(false);
        }
        let body = self.pose.to_body(p);
        Ok(body.norm() > self.shape.polar_radius(body.y.atan2(body.x)))
    }

    /// Same scenario mirrored about the x-axis.
    pub fn mirrored(&self) -> Scenario {
        let mut m = self.clone();
        m.pose.y = -m.pose.y;
        m.pose.psi = -m.pose.psi;
        if let Some(w) = m.vessel.walls.as_mut() {
            let flip = |p: &Vec<[f64; 2]>| p.iter().map(|q| [q[0], -q[1]]).collect::<Vec<_>>();
            let (lo, up) = (flip(&w.upper), flip(&w.lower));
            w.lower = lo;
            w.upper = up;
        }
        m
    }
}

// ---- JSON form ----

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotFile {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

/// Serialized scenario: `{fluid:{rho,eta,T}, vessel:{kind,d,L,walls?},
/// robot:{kind,r|a,b,x,y,psi}, inlet_u}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub fluid: FluidProperties,
    pub vessel: VesselGeometry,
    pub robot: RobotFile,
    pub inlet_u: f64,
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(f: ScenarioFile) -> Result<Self> {
        let shape = match f.robot.kind.as_str() {
            "circle" => RobotShape::Circle {
                r: f.robot.r.ok_or_else(|| Error::Config("circle robot needs `r`".into()))?,
            },
            "ellipse" => RobotShape::Ellipse {
                a: f.robot.a.ok_or_else(|| Error::Config("ellipse robot needs `a`".into()))?,
                b: f.robot.b.ok_or_else(|| Error::Config("ellipse robot needs `b`".into()))?,
            },
            other => return Err(Error::Config(format!("unknown robot kind `{other}`"))),
        };
        Ok(Scenario {
            fluid: f.fluid,
            vessel: f.vessel,
            shape,
            pose: RobotPose { x: f.robot.x, y: f.robot.y, psi: f.robot.psi },
            inlet_u: f.inlet_u,
        })
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        let (kind, r, a, b) = match s.shape {
            RobotShape::Circle { r } => ("circle", Some(r), None, None),
            RobotShape::Ellipse { a, b } => ("ellipse", None, Some(a), Some(b)),
        };
        ScenarioFile {
            fluid: s.fluid,
            vessel: s.vessel,
            robot: RobotFile { kind: kind.into(), r, a, b, x: s.pose.x, y: s.pose.y, psi: s.pose.psi },
            inlet_u: s.inlet_u,
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text)?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

// ---- curved vessel family ----

/// Vessel with a straight entry, a Gaussian bump on the lower wall and a
/// gently curving circular-arc section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvedVessel {
    pub diameter: f64,
    /// Length of the straight entry section along the centerline.
    pub straight_length: f64,
    /// Centerline position of the bump peak.
    pub bump_center: f64,
    /// Inward displacement of the lower wall at the peak.
    pub bump_height: f64,
    /// Gaussian width (standard deviation) of the bump.
    pub bump_width: f64,
    /// Radius of the arc section; the vessel turns counterclockwise.
    pub arc_radius: f64,
    /// Turning angle of the arc section.
    pub arc_angle: f64,
    /// Polyline spacing used to sample the walls.
    pub spacing: f64,
}

impl Default for CurvedVessel {
    fn default() -> Self {
        CurvedVessel {
            diameter: 8.0,
            straight_length: 45.0,
            bump_center: 30.0,
            bump_height: 1.0,
            bump_width: 1.0,
            arc_radius: 60.0,
            arc_angle: 0.6,
            spacing: 0.05,
        }
    }
}

impl CurvedVessel {
    fn centerline(&self, s: f64) -> (Vec2, Vec2) {
        if s <= self.straight_length {
            (Vec2::new(s, 0.0), Vec2::new(0.0, 1.0))
        } else {
            let phi = (s - self.straight_length) / self.arc_radius;
            let origin = Vec2::new(self.straight_length, self.arc_radius);
            let p = origin + self.arc_radius * Vec2::new(phi.sin(), -phi.cos());
            (p, Vec2::new(-phi.sin(), phi.cos()))
        }
    }

    pub fn total_length(&self) -> f64 {
        self.straight_length + self.arc_radius * self.arc_angle
    }

    pub fn geometry(&self) -> VesselGeometry {
        let total = self.total_length();
        let count = (total / self.spacing).ceil() as usize;
        let half = self.diameter / 2.0;
        let mut lower = Vec::with_capacity(count + 1);
        let mut upper = Vec::with_capacity(count + 1);
        for k in 0..=count {
            let s = total * k as f64 / count as f64;
            let (c, nu) = self.centerline(s);
            let bump = self.bump_height
                * (-(s - self.bump_center).powi(2) / (2.0 * self.bump_width.powi(2))).exp();
            let lo = c - (half - bump) * nu;
            let up = c + half * nu;
            lower.push([lo.x, lo.y]);
            upper.push([up.x, up.y]);
        }
        VesselGeometry {
            kind: VesselKind::Walled,
            d: self.diameter,
            length: total,
            walls: Some(Walls { lower, upper }),
        }
    }

    /// Trajectory preset: robot below the axis near the entry, flow to the right.
    pub fn preset_scenario(&self) -> Scenario {
        Scenario {
            fluid: FluidProperties::blood_plasma(),
            vessel: self.geometry(),
            shape: RobotShape::Circle { r: 1.0 },
            pose: RobotPose { x: 10.0, y: -1.6, psi: 0.0 },
            inlet_u: 1000.0,
        }
    }
}

// ---- planar geometry helpers ----

pub(crate) fn closest_point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + t * ab
}

pub(crate) fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    (p - closest_point_on_segment(p, a, b)).norm()
}

pub(crate) fn closed_edges(pts: &[Vec2]) -> Vec<(Vec2, Vec2)> {
    (0..pts.len()).map(|i| (pts[i], pts[(i + 1) % pts.len()])).collect()
}

pub(crate) fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let cross = |o: Vec2, a: Vec2, b: Vec2| (a - o).perp(&(b - o));
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0)) && d1 != 0.0 && d2 != 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kinematic_viscosity_matches_ratio() {
        let f = FluidProperties::blood_plasma();
        assert_relative_eq!(f.kinematic_viscosity(), 1e-6, max_relative = 1e-12);
    }

    #[test]
    fn table2_gap_and_reynolds() {
        let s = Scenario::table2();
        s.validate().unwrap();
        assert_relative_eq!(s.min_gap().unwrap(), 0.3, epsilon = 1e-12);
        assert_relative_eq!(s.reynolds(), 6e-3, max_relative = 1e-12);
    }

    #[test]
    fn json_round_trip_uses_documented_field_names() {
        let s = Scenario::table2();
        let text = s.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["fluid"]["rho"], 1000.0);
        assert_eq!(v["fluid"]["T"], 310.0);
        assert_eq!(v["vessel"]["kind"], "straight");
        assert_eq!(v["vessel"]["L"], 10.0);
        assert_eq!(v["robot"]["kind"], "circle");
        assert_eq!(v["robot"]["r"], 1.0);
        assert_eq!(v["inlet_u"], 1000.0);
        assert_eq!(Scenario::from_json(&text).unwrap(), s);
    }

    #[test]
    fn malformed_json_is_rejected() {
        assert!(matches!(Scenario::from_json("{not json"), Err(Error::Json(_))));
        let missing = r#"{"fluid":{"rho":1000,"eta":0.001,"T":310},"vessel":{"kind":"straight","d":6,"L":10},
            "robot":{"kind":"ellipse","a":1.3,"x":5,"y":0,"psi":0},"inlet_u":1000}"#;
        assert!(Scenario::from_json(missing).is_err());
    }

    #[test]
    fn overlapping_robot_is_a_geometry_violation() {
        let mut s = Scenario::table2();
        s.pose.y = -2.2;
        assert!(matches!(s.validate(), Err(Error::GeometryViolation(_))));
    }

    #[test]
    fn ellipse_helpers() {
        let e = RobotShape::ellipse_equal_area(1.3, 1.0);
        e.validate().unwrap();
        if let RobotShape::Ellipse { a, b } = e {
            assert_relative_eq!(a * b, 1.0, epsilon = 1e-14);
        }
        assert_relative_eq!(e.polar_radius(0.0), 1.3, epsilon = 1e-14);
        assert_relative_eq!(e.support(std::f64::consts::FRAC_PI_2), 1.0 / 1.3, epsilon = 1e-14);
        assert_relative_eq!(e.normal_angle(0.0), 0.0, epsilon = 1e-14);
        assert!(RobotShape::Ellipse { a: 1.0, b: 1.2 }.validate().is_err());
    }

    #[test]
    fn curved_vessel_is_valid_and_mirrors() {
        let cv = CurvedVessel::default();
        let s = cv.preset_scenario();
        s.validate().unwrap();
        let m = s.mirrored();
        m.validate().unwrap();
        assert_relative_eq!(s.min_gap().unwrap(), m.min_gap().unwrap(), epsilon = 1e-12);
        assert_relative_eq!(s.local_diameter().unwrap(), 8.0, epsilon = 1e-9);
    }
}
