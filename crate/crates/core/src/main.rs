use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stressnav::estimators::EstimatorSettings;
use stressnav::experiment::*;
use stressnav::scenario::{CurvedVessel, Scenario};
use stressnav::solver::{solve_flow, speed_profile_scan, surface_traction, SensorArray};
use stressnav::training::{evaluate, generate_samples, read_dataset_csv, train, write_dataset_csv, Dataset};
use stressnav::{Error, Result};

/// Stress-based navigation experiments: flow solves, training corpora,
/// estimator fits and evaluation, trajectories and sensor-noise sweeps.
#[derive(Parser, Debug)]
#[command(name = "stressnav", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for scenario sampling and noise (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON configuration; every section is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for outputs and run manifests.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for dataset generation and sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `paper-reference` or a path to a models file.
    #[arg(long, global = true, default_value = "paper-reference")]
    models: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Table2,
    Curved,
}

#[derive(Args, Debug)]
struct ScenarioArg {
    /// Scenario JSON file.
    scenario: Option<PathBuf>,
    /// Built-in scenario used when no file is given.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one scenario and export motion, residuals and sensor readings.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Also sample velocity and pressure on an NX,NY grid into field.csv.
        #[arg(long, value_delimiter = ',', value_name = "NX,NY")]
        field: Option<Vec<usize>>,
        /// Include per-stage timings in the solution.
        #[arg(long)]
        profile: bool,
    },
    /// Generate the training and test corpus.
    Dataset,
    /// Fit the estimator models on the training split.
    Train {
        /// Dataset CSV (generated when absent).
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Evaluate models on the test split.
    Eval {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Step a robot through a vessel, estimating as it goes.
    Trajectory {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Simulated time, s.
        #[arg(long)]
        duration: Option<f64>,
        /// Interval between readings, s.
        #[arg(long)]
        dt: Option<f64>,
        /// Readings between estimates.
        #[arg(long)]
        estimate_every: Option<usize>,
    },
    /// Sweep averaging time, sensor size and flow speed.
    Noise,
    /// Speed and rotation across the vessel for a scenario.
    Profile {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Number of robot positions across the vessel.
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Dataset => "dataset",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Trajectory { .. } => "trajectory",
            Command::Noise => "noise",
            Command::Profile { .. } => "profile",
        }
    }
}

struct Run {
    out_dir: PathBuf,
    manifest: RunManifest,
    config: ExperimentConfig,
    models: String,
}

impl Run {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(name);
        write_atomic(&path, bytes)?;
        self.manifest.outputs.push(path.display().to_string());
        Ok(())
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f(self);
        self.manifest.timings.insert(stage.into(), t.elapsed().as_secs_f64());
        out
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn scenario_input(arg: &ScenarioArg, default: Preset) -> Result<(String, Vec<u8>)> {
    match (&arg.scenario, arg.preset) {
        (Some(_), Some(_)) => Err(Error::Config("give a scenario file or --preset, not both".into())),
        (Some(p), None) => Ok((p.display().to_string(), read_input(p)?)),
        (None, preset) => Ok(match preset.unwrap_or(default) {
            Preset::Table2 => ("preset:table2".into(), TABLE2_SCENARIO_JSON.as_bytes().to_vec()),
            Preset::Curved => ("preset:curved".into(), CurvedVessel::default().preset_scenario().to_json().into_bytes()),
        }),
    }
}

fn parse_scenario(bytes: &[u8]) -> Result<Scenario> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Config(format!("scenario is not UTF-8: {e}")))?;
    let s = Scenario::from_json(text)?;
    s.validate()?;
    Ok(s)
}

fn dataset_input(run: &Run, path: &Option<PathBuf>) -> Option<PathBuf> {
    let p = path.clone().unwrap_or_else(|| run.out_dir.join("dataset.csv"));
    p.exists().then_some(p)
}

fn load_or_generate(run: &mut Run, path: Option<PathBuf>) -> Result<Dataset> {
    match path {
        Some(p) => run.time("read_dataset", |run| read_dataset_csv(fs::File::open(&p)?, &run.config.sampler)),
        None => {
            log::info!("no dataset found; generating {} samples", run.config.sampler.count);
            let data = run.time("generate", |run| generate_samples(&run.config.sampler, &run.config.discretization))?;
            let mut buf = Vec::new();
            write_dataset_csv(&data, run.config.estimator.modes, &mut buf)?;
            run.write("dataset.csv", &buf)?;
            Ok(data)
        }
    }
}

fn execute(cmd: &Command, run: &mut Run) -> Result<()> {
    match cmd {
        Command::Solve { scenario, field, profile } => {
            let (_, bytes) = scenario_input(scenario, Preset::Table2)?;
            let s = parse_scenario(&bytes)?;
            let sol = run.time("solve", |run| solve_flow(&s, &run.config.discretization))?;
            run.manifest.solves = 1;
            if *profile {
                let t = sol.timings;
                for (k, v) in [("mesh", t.mesh_s), ("assembly", t.assembly_s), ("factorization", t.factorization_s), ("postprocess", t.postprocess_s)] {
                    run.manifest.timings.insert(format!("solve.{k}"), v);
                }
            }
            let sensors = SensorArray::new(run.config.sampler.sensors)?;
            let reading = surface_traction(&sol, &sensors, &s.pose);
            let export = SolutionExport::new(&s, &sol, reading, sensors.angles(), *profile);
            run.write("solution.json", serde_json::to_string_pretty(&export)?.as_bytes())?;
            if let Some(grid) = field {
                if grid.len() != 2 {
                    return Err(Error::Config("--field takes NX,NY".into()));
                }
                let rows = run.time("field", |_| sample_field(&s, &sol, grid[0], grid[1]))?;
                run.write("field.csv", &to_csv(&rows)?)?;
            }
            println!("speed {:.3} µm/s, omega {:.3} rad/s", sol.motion.speed(), sol.motion.omega);
        }
        Command::Dataset => {
            let data = run.time("generate", |run| generate_samples(&run.config.sampler, &run.config.discretization))?;
            let mut buf = Vec::new();
            write_dataset_csv(&data, run.config.estimator.modes, &mut buf)?;
            run.write("dataset.csv", &buf)?;
            println!("{} samples, {} redraws", data.samples.len(), data.redraws);
        }
        Command::Train { dataset } => {
            let path = dataset_input(run, dataset);
            let data = load_or_generate(run, path)?;
            let models = run.time("fit", |run| train(&data, &run.config.sampler, &run.config.discretization, &run.config.fit))?;
            run.write("models.json", models.to_json().as_bytes())?;
            println!(
                "explained {:.4}, logistic {:?}, speed ratio a {:.3} b {:.3}",
                models.pca.explained.iter().take(2).sum::<f64>(),
                models.position.beta,
                models.speed_ratio.a,
                models.speed_ratio.b
            );
        }
        Command::Eval { dataset } => {
            let models = load_models(&run.models)?;
            let path = dataset_input(run, dataset);
            let data = load_or_generate(run, path)?;
            let ev = run.time("evaluate", |run| evaluate(&models, &data, &run.config.estimator))?;
            run.write("metrics.json", serde_json::to_string_pretty(&ev.report)?.as_bytes())?;
            for (quantity, rows) in &ev.scatter {
                run.write(&format!("scatter_{quantity}.csv"), &to_csv(rows)?)?;
            }
            println!("{} test samples evaluated", ev.report.test_samples);
        }
        Command::Trajectory { scenario, duration, dt, estimate_every } => {
            let (_, bytes) = scenario_input(scenario, Preset::Curved)?;
            let s = parse_scenario(&bytes)?;
            let mut cfg = run.config.trajectory.clone();
            cfg.duration = duration.unwrap_or(cfg.duration);
            cfg.dt = dt.unwrap_or(cfg.dt);
            cfg.estimate_every = estimate_every.unwrap_or(cfg.estimate_every);
            cfg.validate()?;
            let models = load_models(&run.models)?;
            let settings: EstimatorSettings = run.config.estimator.clone();
            let disc = run.config.discretization.clone();
            let tr = run.time("trajectory", |_| run_trajectory(&s, &cfg, &disc, &models, &settings))?;
            run.manifest.solves = tr.solves;
            run.write("trajectory.csv", &to_csv(&tr.rows)?)?;
            let summary = TrajectorySummary::from(&tr);
            run.write("trajectory_summary.json", serde_json::to_string_pretty(&summary)?.as_bytes())?;
            println!("{} steps, {} estimates", tr.rows.len(), tr.estimated().count());
            if let Some(kind) = &tr.terminated_kind {
                let msg = tr.terminated.clone().unwrap_or_default();
                return Err(match kind.as_str() {
                    "geometry-violation" => Error::GeometryViolation(format!("trajectory stopped early, partial output written: {msg}")),
                    _ => Error::StepFailure(format!("trajectory stopped early, partial output written: {msg}")),
                });
            }
        }
        Command::Noise => {
            let models = load_models(&run.models)?;
            let cfg = run.config.noise.clone();
            let (disc, settings) = (run.config.discretization.clone(), run.config.estimator.clone());
            let rows = run.time("sweep", |_| run_noise_sweep(&cfg, &disc, &models, &settings))?;
            run.write("noise_sweep.csv", &to_csv(&rows)?)?;
            let trace = run.time("trace", |_| oscillator_trace(&cfg))?;
            run.write("oscillator_trace.csv", &to_csv(&trace)?)?;
            println!("{} sweep rows", rows.len());
        }
        Command::Profile { scenario, points } => {
            let (_, bytes) = scenario_input(scenario, Preset::Table2)?;
            let s = parse_scenario(&bytes)?;
            if *points < 2 {
                return Err(Error::Config("profile needs at least 2 points".into()));
            }
            let room = s.vessel.d / 2.0 - s.shape.max_extent();
            // stay 2% of the room away from contact at both ends
            let ys: Vec<f64> = (0..*points).map(|k| room * 0.98 * (2.0 * k as f64 / (*points - 1) as f64 - 1.0)).collect();
            let rows = run.time("scan", |run| Ok(speed_profile_scan(&s, &ys, &run.config.discretization)))?;
            run.manifest.solves = rows.len();
            run.write("profile.csv", &to_csv(&rows)?)?;
            println!("{} positions", rows.len());
        }
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct TrajectorySummary {
    schema_version: u32,
    steps: usize,
    estimates: usize,
    solves: usize,
    min_correlation: Option<f64>,
    terminated: Option<String>,
    terminated_kind: Option<String>,
}

impl From<&Trajectory> for TrajectorySummary {
    fn from(t: &Trajectory) -> Self {
        TrajectorySummary {
            schema_version: SCHEMA_VERSION,
            steps: t.rows.len(),
            estimates: t.estimated().count(),
            solves: t.solves,
            min_correlation: t.estimated().filter_map(|r| r.correlation).reduce(f64::min),
            terminated: t.terminated.clone(),
            terminated_kind: t.terminated_kind.clone(),
        }
    }
}

fn inputs_for(cmd: &Command, global: &Global) -> Result<Vec<(String, Vec<u8>)>> {
    let mut inputs = Vec::new();
    match cmd {
        Command::Solve { scenario, .. } | Command::Profile { scenario, .. } => inputs.push(scenario_input(scenario, Preset::Table2)?),
        Command::Trajectory { scenario, duration, dt, estimate_every } => {
            inputs.push(scenario_input(scenario, Preset::Curved)?);
            inputs.push(("args".into(), format!("{duration:?} {dt:?} {estimate_every:?}").into_bytes()));
        }
        Command::Train { dataset } | Command::Eval { dataset } => {
            if let Some(p) = dataset {
                inputs.push((p.display().to_string(), read_input(p)?));
            }
        }
        _ => {}
    }
    if matches!(cmd, Command::Eval { .. } | Command::Trajectory { .. } | Command::Noise) {
        let bytes = if global.models == "paper-reference" { b"paper-reference".to_vec() } else { read_input(Path::new(&global.models))? };
        inputs.push((format!("models:{}", global.models), bytes));
    }
    Ok(inputs)
}

fn fail(e: &Error) -> ExitCode {
    let doc = ErrorDoc::from(e);
    eprintln!("{}", serde_json::to_string(&doc).expect("error document serializes"));
    ExitCode::from(doc.exit_code as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let g = &cli.global;
    if let Some(n) = g.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(&Error::Config(format!("thread pool: {e}")));
        }
    }
    let loaded = ExperimentConfig::load(g.config.as_deref()).map(|c| c.with_seed(g.seed));
    let prepared = loaded.and_then(|c| c.validate().map(|_| c)).and_then(|c| Ok((inputs_for(&cli.command, g)?, c)));
    let (mut inputs, config) = match prepared {
        Ok(v) => v,
        Err(e) => {
            // still leave a record of the attempt
            let mut m = RunManifest::new(cli.command.name(), &ExperimentConfig::default().with_seed(g.seed), &[]);
            m.error = Some(ErrorDoc::from(&e));
            if let Err(w) = m.write(&g.out_dir) {
                log::warn!("could not write manifest: {w}");
            }
            return fail(&e);
        }
    };
    if let Some(p) = &g.config {
        inputs.insert(0, (p.display().to_string(), Vec::new()));
    }
    let mut run = Run {
        out_dir: g.out_dir.clone(),
        manifest: RunManifest::new(cli.command.name(), &config, &inputs),
        config,
        models: g.models.clone(),
    };
    let started = Instant::now();
    let result = execute(&cli.command, &mut run);
    run.manifest.wall_clock_s = started.elapsed().as_secs_f64();
    if let Err(e) = &result {
        run.manifest.error = Some(ErrorDoc::from(e));
    }
    let written = run.manifest.write(&run.out_dir);
    match (result, written) {
        (Ok(()), Ok(_)) => ExitCode::SUCCESS,
        (Err(e), _) | (Ok(()), Err(e)) => fail(&e),
    }
}
