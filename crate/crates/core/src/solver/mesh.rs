//! Boundary panelization: the vessel outline (walls, inlet, outlet) as one
//! closed curve, and the robot surface as a second.

use std::f64::consts::TAU;

use super::Discretization;
use crate::error::{Error, Result};
use crate::scenario::{RobotPose, RobotShape, Vec2, VesselGeometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Part {
    Wall,
    Inlet,
    Outlet,
    Robot,
}

#[derive(Clone, Debug)]
pub(crate) struct Panel {
    pub mid: Vec2,
    pub tangent: Vec2,
    /// Right-hand normal of the traversal direction; outward from the robot
    /// and outward from the fluid on the vessel outline.
    pub normal: Vec2,
    pub length: f64,
    pub part: Part,
    /// Prescribed velocity on the vessel outline.
    pub velocity: Vec2,
}

impl Panel {
    fn new(a: Vec2, b: Vec2, part: Part) -> Self {
        let d = b - a;
        let length = d.norm();
        let tangent = d / length;
        Panel {
            mid: (a + b) / 2.0,
            tangent,
            normal: Vec2::new(tangent.y, -tangent.x),
            length,
            part,
            velocity: Vec2::zeros(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Mesh {
    pub panels: Vec<Panel>,
    /// Panels `0..outer` form the vessel outline; the rest are robot panels.
    pub outer: usize,
    /// Midpoint of the downstream end, pulled inside, where pressure is zero.
    pub gauge_point: Vec2,
    /// Characteristic size used to shift the logarithm in the kernel.
    pub extent: f64,
}

pub(crate) struct RobotGeometry<'a> {
    pub shape: &'a RobotShape,
    pub pose: &'a RobotPose,
    pub gap: f64,
}

/// Arc-length parametrized polyline.
struct Path {
    pts: Vec<Vec2>,
    cumulative: Vec<f64>,
}

impl Path {
    fn new(pts: Vec<Vec2>) -> Self {
        let mut cumulative = vec![0.0];
        for w in pts.windows(2) {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + (w[1] - w[0]).norm());
        }
        Path { pts, cumulative }
    }

    fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.length());
        let k = match self.cumulative.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(k) => return self.pts[k],
            Err(k) => k.max(1) - 1,
        };
        let seg = self.cumulative[k + 1] - self.cumulative[k];
        let t = if seg > 0.0 { (s - self.cumulative[k]) / seg } else { 0.0 };
        self.pts[k] + (self.pts[k + 1] - self.pts[k]) * t
    }

    /// Breakpoints spaced by the local panel size.
    fn breakpoints(&self, size: impl Fn(Vec2) -> f64) -> Vec<Vec2> {
        let total = self.length();
        let mut stations = vec![0.0];
        let mut s = 0.0;
        while s < total {
            s += size(self.at(s));
            stations.push(s);
        }
        // stretch so the last station lands on the end
        let scale = total / s;
        stations.iter().map(|&st| self.at(st * scale)).collect()
    }
}

fn poiseuille(a: Vec2, b: Vec2, mid: Vec2, peak: f64, direction: Vec2) -> Vec2 {
    let width = (b - a).norm();
    let xi = ((mid - a).dot(&(b - a)) / (width * width)).clamp(0.0, 1.0);
    direction * (peak * 4.0 * xi * (1.0 - xi))
}

pub(crate) fn build(
    vessel: &VesselGeometry,
    inlet_u: f64,
    robot: Option<RobotGeometry<'_>>,
    disc: &Discretization,
) -> Result<Mesh> {
    let (lower, upper) = vessel.wall_paths()?;
    let near = match &robot {
        Some(r) => disc.near_size.min(0.5 * r.gap),
        None => disc.far_size,
    };
    let (center, reach) = match &robot {
        Some(r) => (r.pose.center(), r.shape.max_extent()),
        None => (Vec2::zeros(), 0.0),
    };
    let has_robot = robot.is_some();
    let size = |p: Vec2| {
        if !has_robot {
            return disc.far_size;
        }
        let dist = ((p - center).norm() - reach).max(0.0);
        (disc.grading * dist).clamp(near, disc.far_size)
    };

    let lower_pts = Path::new(lower.clone()).breakpoints(size);
    let upper_pts = Path::new(upper.clone()).breakpoints(size);

    let in_a = lower[0];
    let in_b = upper[0];
    let out_a = *lower.last().unwrap();
    let out_b = *upper.last().unwrap();
    let in_width = (in_b - in_a).norm();
    let out_width = (out_b - out_a).norm();
    if !(in_width > 0.0 && out_width > 0.0) {
        return Err(Error::InvalidGeometry("vessel ends have zero width".into()));
    }
    // into the domain at the inlet, out of it at the outlet
    let into_domain = {
        let t = (in_b - in_a) / in_width;
        let n = Vec2::new(t.y, -t.x);
        let inward = (lower[1] + upper[1]) / 2.0 - (in_a + in_b) / 2.0;
        if n.dot(&inward) >= 0.0 {
            n
        } else {
            -n
        }
    };
    let out_of_domain = {
        let t = (out_b - out_a) / out_width;
        let n = Vec2::new(t.y, -t.x);
        let k = lower.len() - 2;
        let inward = (lower[k] + upper[upper.len() - 2]) / 2.0 - (out_a + out_b) / 2.0;
        if n.dot(&inward) <= 0.0 {
            n
        } else {
            -n
        }
    };
    let out_peak = inlet_u * in_width / out_width;

    let end_count = |w: f64| disc.end_panels.max((w / disc.far_size).ceil() as usize);
    let mut panels = Vec::new();
    for w in lower_pts.windows(2) {
        panels.push(Panel::new(w[0], w[1], Part::Wall));
    }
    let n_out = end_count(out_width);
    for k in 0..n_out {
        let a = out_a + (out_b - out_a) * (k as f64 / n_out as f64);
        let b = out_a + (out_b - out_a) * ((k + 1) as f64 / n_out as f64);
        let mut p = Panel::new(a, b, Part::Outlet);
        p.velocity = poiseuille(out_a, out_b, p.mid, out_peak, out_of_domain);
        panels.push(p);
    }
    for w in upper_pts.windows(2).rev() {
        panels.push(Panel::new(w[1], w[0], Part::Wall));
    }
    let n_in = end_count(in_width);
    for k in 0..n_in {
        let a = in_b + (in_a - in_b) * (k as f64 / n_in as f64);
        let b = in_b + (in_a - in_b) * ((k + 1) as f64 / n_in as f64);
        let mut p = Panel::new(a, b, Part::Inlet);
        p.velocity = poiseuille(in_a, in_b, p.mid, inlet_u, into_domain);
        panels.push(p);
    }
    let outer = panels.len();

    if let Some(r) = &robot {
        let count = robot_panel_count(r.shape, r.gap, disc)?;
        let pts: Vec<Vec2> = (0..count)
            .map(|k| r.pose.to_lab(r.shape.boundary_point(TAU * (k as f64 - 0.5) / count as f64)))
            .collect();
        for k in 0..count {
            panels.push(Panel::new(pts[k], pts[(k + 1) % count], Part::Robot));
        }
    }

    // zero pressure is imposed at the downstream end
    let gauge_point = if inlet_u >= 0.0 {
        (out_a + out_b) / 2.0 - out_of_domain * (0.25 * out_width)
    } else {
        (in_a + in_b) / 2.0 + into_domain * (0.25 * in_width)
    };
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in lower.iter().chain(upper.iter()) {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    Ok(Mesh { panels, outer, gauge_point, extent: (hi - lo).norm() })
}

/// Robot panel count: the configured count, raised until panels are no
/// longer than half the robot-wall gap.
pub(crate) fn robot_panel_count(shape: &RobotShape, gap: f64, disc: &Discretization) -> Result<usize> {
    let needed = (shape.perimeter() / (0.5 * gap)).ceil() as usize;
    let count = disc.robot_panels.max(needed);
    if count > disc.max_robot_panels {
        return Err(Error::ResolutionFailure(format!(
            "gap {gap:.4} µm needs {count} robot panels (limit {})",
            disc.max_robot_panels
        )));
    }
    Ok(count)
}
