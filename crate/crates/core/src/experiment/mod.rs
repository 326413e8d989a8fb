//! Reproducible experiment runs behind the command-line tool: configuration,
//! run manifests, atomic output and the trajectory and noise-sweep drivers.

mod noise_sweep;
mod trajectory;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorSettings, ModelSet};
use crate::scenario::{RigidMotion, Scenario, Vec2};
use crate::solver::{Discretization, FlowSolution, Residuals, SolveTimings, StressReading, TractionSample};
use crate::training::{FitOptions, SamplerConfig};

pub use noise_sweep::{oscillator_trace, run_noise_sweep, NoiseSweepConfig, NoiseSweepRow};
pub use trajectory::{run_trajectory, Trajectory, TrajectoryConfig, TrajectoryRow};

/// Version of every JSON and CSV layout written by the tool.
pub const SCHEMA_VERSION: u32 = 1;

/// Bundled example scenario file.
pub const TABLE2_SCENARIO_JSON: &str = include_str!("../../data/table2_scenario.json");

/// Settings for every command. All sections are optional in the file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sampler: SamplerConfig,
    pub discretization: Discretization,
    pub fit: FitOptions,
    pub estimator: EstimatorSettings,
    pub trajectory: TrajectoryConfig,
    pub noise: NoiseSweepConfig,
}

impl ExperimentConfig {
    /// Parses a configuration file, or the `config` of a run manifest so a
    /// recorded run can be replayed.
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("configuration: {e}")))?;
        let is_manifest = value.get("config_hash").is_some() && value.get("config").is_some();
        let config = if is_manifest { value["config"].clone() } else { value };
        serde_json::from_value(config).map_err(|e| Error::Config(format!("configuration: {e}")))
    }

    pub fn load(path: Option<&Path>) -> Result<ExperimentConfig> {
        match path {
            Some(p) => Self::from_json(&fs::read_to_string(p)?),
            None => Ok(ExperimentConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        self.discretization.validate()?;
        if self.fit.modes != self.estimator.modes {
            return Err(Error::Config(format!(
                "fit uses {} modes but the estimators use {}",
                self.fit.modes, self.estimator.modes
            )));
        }
        Ok(())
    }

    /// Applies a command-line seed to every seeded section.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.sampler.seed = s;
            self.noise.seed = s;
        }
        self
    }

    pub fn seed(&self) -> u64 {
        self.sampler.seed
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }
}

/// Hex SHA-256 over the command, the effective configuration and the bytes
/// of every input file, in order.
pub fn config_hash(command: &str, config: &ExperimentConfig, inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(config.canonical_json().as_bytes());
    for input in inputs {
        h.update([0]);
        h.update((input.len() as u64).to_le_bytes());
        h.update(input);
    }
    hex::encode(h.finalize())
}

/// `models` argument: `paper-reference` or a path to a models file.
pub fn load_models(spec: &str) -> Result<ModelSet> {
    if spec == "paper-reference" {
        return Ok(ModelSet::reference());
    }
    let text = fs::read_to_string(spec)
        .map_err(|e| Error::Config(format!("cannot read models `{spec}`: {e}")))?;
    ModelSet::from_json(&text)
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Config(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Serializes rows with a header line.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorDoc {
    pub error: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<&Error> for ErrorDoc {
    fn from(e: &Error) -> Self {
        ErrorDoc { error: e.kind().into(), message: e.to_string(), exit_code: e.exit_code() }
    }
}

/// Record of one command invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub config: ExperimentConfig,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
    /// Named stage timings, s.
    pub timings: BTreeMap<String, f64>,
    pub solves: usize,
    pub error: Option<ErrorDoc>,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig, inputs: &[(String, Vec<u8>)]) -> RunManifest {
        let bytes: Vec<&[u8]> = inputs.iter().map(|(_, b)| b.as_slice()).collect();
        let mut versions = BTreeMap::new();
        versions.insert("stressnav".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("schema".into(), SCHEMA_VERSION.to_string());
        versions.insert("models".into(), ModelSet::VERSION.to_string());
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config_hash: config_hash(command, config, &bytes),
            seed: config.seed(),
            versions,
            config: config.clone(),
            inputs: inputs.iter().map(|(n, _)| n.clone()).collect(),
            outputs: Vec::new(),
            wall_clock_s: 0.0,
            timings: BTreeMap::new(),
            solves: 0,
            error: None,
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}_manifest.json", self.command)
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(self.file_name());
        write_atomic(&path, serde_json::to_string_pretty(self)?.as_bytes())?;
        Ok(path)
    }
}

/// Exported result of a single solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionExport {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub motion: RigidMotion,
    pub speed: f64,
    pub reynolds: f64,
    pub residuals: Residuals,
    pub robot_panels: usize,
    pub total_panels: usize,
    pub reading: StressReading,
    pub sensor_angles: Vec<f64>,
    pub traction: Vec<TractionSample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<SolveTimings>,
}

impl SolutionExport {
    pub fn new(scenario: &Scenario, sol: &FlowSolution, reading: StressReading, sensor_angles: Vec<f64>, timings: bool) -> Self {
        SolutionExport {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.clone(),
            motion: sol.motion,
            speed: sol.motion.speed(),
            reynolds: scenario.reynolds(),
            residuals: sol.residuals,
            robot_panels: sol.robot_panel_count(),
            total_panels: sol.field.panel_count(),
            reading,
            sensor_angles,
            traction: sol.traction.clone(),
            timings: timings.then_some(sol.timings),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub p: f64,
}

/// Velocity and pressure on a regular `nx × ny` grid over the vessel's
/// bounding box, keeping only fluid points.
pub fn sample_field(scenario: &Scenario, sol: &FlowSolution, nx: usize, ny: usize) -> Result<Vec<FieldRow>> {
    if nx < 2 || ny < 2 {
        return Err(Error::Config("field grid needs at least 2 × 2 points".into()));
    }
    let outline = scenario.vessel.outline()?;
    let (mut lo, mut hi) = (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in &outline {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let mut rows = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let p = Vec2::new(
                lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / nx as f64,
                lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / ny as f64,
            );
            if scenario.in_fluid(p)? {
                let u = sol.field.velocity(p);
                rows.push(FieldRow { x: p.x, y: p.y, u_x: u.x, u_y: u.y, p: sol.field.pressure(p) });
            }
        }
    }
    Ok(rows)
}
