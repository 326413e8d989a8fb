//! Closed-form integrals of the 2D Stokeslet over straight panels.
//!
//! A panel carries a constant force density `f`. Relative to the panel
//! midpoint the target sits at `a` along the tangent `e` and `b` along the
//! normal `n = perp(e)`; with `s` running over `[a - h/2, a + h/2]` the
//! separation is `r = s e + b n`. All integrals below are exact for any
//! target, on or off the panel, so near-wall geometry needs no adaptive
//! quadrature.

use std::f64::consts::PI;

use crate::scenario::Vec2;

#[derive(Clone, Copy, Debug)]
pub(crate) struct PanelFrame {
    s1: f64,
    s2: f64,
    b: f64,
    e: Vec2,
    n: Vec2,
    len: f64,
}

impl PanelFrame {
    pub(crate) fn new(target: Vec2, mid: Vec2, tangent: Vec2, len: f64) -> Self {
        let n = Vec2::new(-tangent.y, tangent.x);
        let d = target - mid;
        let a = d.dot(&tangent);
        let b = d.dot(&n);
        PanelFrame { s1: a - 0.5 * len, s2: a + 0.5 * len, b, e: tangent, n, len }
    }

    /// `atan(s2/b) - atan(s1/b)` without dividing by `b`; this is the angle
    /// the panel subtends at the target (±π on the panel itself).
    fn subtended(&self) -> f64 {
        (self.b * (self.s2 - self.s1)).atan2(self.b * self.b + self.s1 * self.s2)
    }

    fn half_log_ratio(&self) -> f64 {
        let q2 = self.s2 * self.s2 + self.b * self.b;
        let q1 = self.s1 * self.s1 + self.b * self.b;
        if q1 == 0.0 || q2 == 0.0 {
            0.0
        } else {
            0.5 * (q2 / q1).ln()
        }
    }

    /// ∫ ln|r| ds
    fn log_integral(&self) -> f64 {
        let prim = |s: f64| {
            let q = s * s + self.b * self.b;
            if q == 0.0 {
                0.0
            } else {
                0.5 * s * q.ln() - s
            }
        };
        prim(self.s2) - prim(self.s1) + self.b * self.subtended()
    }

    /// Velocity influence `u = M f` of a unit-density panel, with the
    /// Stokeslet `(-ln(r/ℓ) I + r r / r²) / (4π μ)`.
    pub(crate) fn stokeslet(&self, viscosity: f64, ln_scale: f64) -> [[f64; 2]; 2] {
        let theta = self.subtended();
        let i_nn = self.b * theta;
        let i_ee = self.len - i_nn;
        let i_en = self.b * self.half_log_ratio();
        let i_log = self.log_integral() - ln_scale * self.len;
        let (e, n) = (self.e, self.n);
        let c = 1.0 / (4.0 * PI * viscosity);
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let delta = if i == j { 1.0 } else { 0.0 };
                *v = c
                    * (-i_log * delta
                        + e[i] * e[j] * i_ee
                        + (e[i] * n[j] + n[i] * e[j]) * i_en
                        + n[i] * n[j] * i_nn);
            }
        }
        m
    }

    /// Pressure influence: `p = w · f` for a unit-density panel.
    pub(crate) fn pressure(&self) -> Vec2 {
        (self.e * self.half_log_ratio() + self.n * self.subtended()) / (2.0 * PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force composite Gauss-Legendre integration of the point
    /// Stokeslet, for targets well away from the panel.
    fn brute_force(target: Vec2, a: Vec2, b: Vec2, viscosity: f64, ln_scale: f64) -> ([[f64; 2]; 2], Vec2) {
        let nodes = [-0.906179845938664, -0.538469310105683, 0.0, 0.538469310105683, 0.906179845938664];
        let weights = [0.236926885056189, 0.478628670499366, 0.568888888888889, 0.478628670499366, 0.236926885056189];
        let pieces = 200;
        let mut m = [[0.0; 2]; 2];
        let mut w = Vec2::zeros();
        let len = (b - a).norm();
        for p in 0..pieces {
            let t0 = p as f64 / pieces as f64;
            let t1 = (p + 1) as f64 / pieces as f64;
            for (x, wt) in nodes.iter().zip(weights) {
                let t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * x;
                let y = a + (b - a) * t;
                let r = target - y;
                let r2 = r.norm_squared();
                let ds = wt * 0.5 * (t1 - t0) * len;
                for i in 0..2 {
                    for j in 0..2 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        m[i][j] += ds * (-(0.5 * r2.ln() - ln_scale) * delta + r[i] * r[j] / r2)
                            / (4.0 * PI * viscosity);
                    }
                }
                w += ds * r / r2 / (2.0 * PI);
            }
        }
        (m, w)
    }

    #[test]
    fn closed_form_matches_quadrature_off_panel() {
        let a = Vec2::new(0.3, -0.2);
        let b = Vec2::new(1.1, 0.4);
        let mid = (a + b) / 2.0;
        let len = (b - a).norm();
        let e = (b - a) / len;
        for target in [Vec2::new(2.0, 1.0), Vec2::new(0.7, 0.9), Vec2::new(-1.0, -0.5), Vec2::new(0.75, 0.05)] {
            let frame = PanelFrame::new(target, mid, e, len);
            let m = frame.stokeslet(1e-3, 0.7);
            let w = frame.pressure();
            let (mb, wb) = brute_force(target, a, b, 1e-3, 0.7);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((m[i][j] - mb[i][j]).abs() < 1e-8 * mb[i][j].abs().max(1.0), "{i}{j}: {} vs {}", m[i][j], mb[i][j]);
                }
            }
            assert!((w - wb).norm() < 1e-9);
        }
    }

    #[test]
    fn self_panel_is_finite_and_symmetric() {
        let e = Vec2::new(1.0, 0.0);
        let frame = PanelFrame::new(Vec2::zeros(), Vec2::zeros(), e, 0.1);
        let m = frame.stokeslet(1.0, 0.0);
        // ∫_{-h/2}^{h/2} ln|s| ds = h (ln(h/2) - 1)
        let expect_log = 0.1 * ((0.05f64).ln() - 1.0);
        assert!((m[1][1] - (-expect_log) / (4.0 * PI)).abs() < 1e-14);
        assert!((m[0][0] - (-expect_log + 0.1) / (4.0 * PI)).abs() < 1e-14);
        assert!(m[0][1].abs() < 1e-16 && m[1][0].abs() < 1e-16);
    }
}
