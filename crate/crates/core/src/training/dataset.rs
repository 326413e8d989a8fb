//! Dataset CSV format.
//!
//! Columns: `id, split, u, d, L, x_c, y_c, psi, relpos, v_x, v_y, omega,
//! speed_ratio, speed, wall_distance, wall_direction, motion_direction`, the
//! normal then tangential stress at each sensor (`fn_j`, `ft_j`), the
//! relative magnitudes (`m_normal_k`, `m_tangential_k`), then the later
//! reading (`dt, omega_interval, fn_b_j, ft_b_j`), empty when absent.
//! Numbers use the shortest representation that reads back exactly.

use std::io::{Read, Write};

use super::{Dataset, Labels, LaterReading, Sample, SamplerConfig, Split};
use crate::error::{Error, Result};
use crate::features::fourier_coefficients;
use crate::scenario::{RigidMotion, RobotPose, RobotShape, Scenario, VesselGeometry};
use crate::solver::StressReading;

const LEAD: [&str; 17] = [
    "id", "split", "u", "d", "L", "x_c", "y_c", "psi", "relpos", "v_x", "v_y", "omega", "speed_ratio", "speed",
    "wall_distance", "wall_direction", "motion_direction",
];

fn header(n: usize, m: usize) -> Vec<String> {
    let mut h: Vec<String> = LEAD.iter().map(|s| s.to_string()).collect();
    h.extend((0..n).map(|j| format!("fn_{j}")));
    h.extend((0..n).map(|j| format!("ft_{j}")));
    h.extend((1..=m).map(|k| format!("m_normal_{k}")));
    h.extend((1..=m).map(|k| format!("m_tangential_{k}")));
    h.push("dt".into());
    h.push("omega_interval".into());
    h.extend((0..n).map(|j| format!("fn_b_{j}")));
    h.extend((0..n).map(|j| format!("ft_b_{j}")));
    h
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("dataset csv: {e}"))
}

pub fn write_dataset_csv<W: Write>(data: &Dataset, modes: usize, out: W) -> Result<()> {
    let n = data.samples.first().map_or(0, |s| s.reading.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(n, modes)).map_err(csv_err)?;
    for s in &data.samples {
        let l = &s.labels;
        let p = &s.scenario.pose;
        let mut row: Vec<String> = vec![
            s.id.to_string(),
            match s.split {
                Split::Train => "train".into(),
                Split::Test => "test".into(),
            },
        ];
        let nums = [
            s.scenario.inlet_u,
            s.scenario.vessel.d,
            s.scenario.vessel.length,
            p.x,
            p.y,
            p.psi,
            l.relpos,
            s.motion.vx,
            s.motion.vy,
            s.motion.omega,
            l.speed_ratio,
            l.speed,
            l.wall_distance,
            l.wall_direction,
            l.motion_direction,
        ];
        row.extend(nums.iter().map(|v| v.to_string()));
        row.extend(s.reading.normal.iter().chain(&s.reading.tangential).map(|v| v.to_string()));
        match fourier_coefficients(&s.reading, modes).ok().filter(|f| !f.relative.is_empty()) {
            Some(f) => row.extend(f.relative.iter().map(|v| v.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), 2 * modes)),
        }
        match &s.later {
            Some(b) => {
                row.push(b.dt.to_string());
                row.push(b.omega.to_string());
                row.extend(b.reading.normal.iter().chain(&b.reading.tangential).map(|v| v.to_string()));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 2 + 2 * n)),
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset_csv`]. Fluid properties and
/// the robot radius come from the sampler configuration.
pub fn read_dataset_csv<R: Read>(input: R, cfg: &SamplerConfig) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_reader(input);
    let head = rdr.headers().map_err(csv_err)?.clone();
    let n = head.iter().filter(|h| h.starts_with("fn_") && !h.starts_with("fn_b_")).count();
    let m = head.iter().filter(|h| h.starts_with("m_normal_")).count();
    if n < 2 || head.iter().map(String::from).collect::<Vec<_>>() != header(n, m) {
        return Err(Error::Config("dataset csv header does not match the documented layout".into()));
    }
    let mut samples = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |what: &str| Error::Config(format!("dataset row {}: bad {what}", line + 1));
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(&head[i]));
        let id: usize = rec[0].parse().map_err(|_| bad("id"))?;
        let split = match &rec[1] {
            "train" => Split::Train,
            "test" => Split::Test,
            _ => return Err(bad("split")),
        };
        let v: Vec<f64> = (2..LEAD.len()).map(num).collect::<Result<_>>()?;
        let scenario = Scenario {
            fluid: cfg.fluid.clone(),
            vessel: VesselGeometry::straight(v[1], v[2]),
            shape: RobotShape::Circle { r: cfg.radius },
            pose: RobotPose { x: v[3], y: v[4], psi: v[5] },
            inlet_u: v[0],
        };
        let motion = RigidMotion { vx: v[7], vy: v[8], omega: v[9] };
        let labels = Labels {
            relpos: v[6],
            diameter: v[1],
            wall_distance: v[12],
            omega: v[9],
            speed_ratio: v[10],
            speed: v[11],
            wall_direction: v[13],
            motion_direction: v[14],
        };
        let base = LEAD.len();
        let stress = |from: usize| -> Result<Vec<f64>> { (from..from + n).map(num).collect() };
        let reading = StressReading { timestamp: 0.0, normal: stress(base)?, tangential: stress(base + n)? };
        let later_at = base + 2 * n + 2 * m;
        let later = if rec[later_at].is_empty() {
            None
        } else {
            let dt = num(later_at)?;
            Some(LaterReading {
                dt,
                omega: num(later_at + 1)?,
                reading: StressReading { timestamp: dt, normal: stress(later_at + 2)?, tangential: stress(later_at + 2 + n)? },
            })
        };
        samples.push(Sample { id, split, scenario, motion, reading, labels, later });
    }
    Ok(Dataset { samples, redraws: 0 })
}
