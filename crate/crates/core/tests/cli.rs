use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use stressnav::estimators::{EstimatorSettings, ModelSet};
use stressnav::experiment::*;
use stressnav::noise::SensorDesign;
use stressnav::scenario::Scenario;
use stressnav::solver::Discretization;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stressnav"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn error_doc(out: &Output) -> ErrorDoc {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no error document in {text}"));
    serde_json::from_str(line).unwrap()
}

#[test]
fn bundled_example_matches_builtin() {
    let bundled = Scenario::from_json(TABLE2_SCENARIO_JSON).unwrap();
    assert_eq!(bundled, Scenario::table2());
}

#[test]
fn solve_writes_solution_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve", "--preset", "table2", "--field", "8,4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("534.3"));

    let sol = json(&dir.path().join("solution.json"));
    assert_eq!(sol["schema_version"], SCHEMA_VERSION);
    let speed = sol["speed"].as_f64().unwrap();
    assert!((speed - 534.3).abs() < 0.5);
    assert_eq!(sol["reading"]["normal"].as_array().unwrap().len(), 30);
    assert!(sol.get("timings").is_none());

    let field = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(field.starts_with("x,y,u_x,u_y,p"));
    assert!(field.lines().count() > 10);

    let m: RunManifest = serde_json::from_value(json(&dir.path().join("solve_manifest.json"))).unwrap();
    assert_eq!(m.command, "solve");
    assert_eq!(m.solves, 1);
    assert!(m.error.is_none());
    assert_eq!(m.outputs.len(), 2);
    assert_eq!(m.config, ExperimentConfig::default());
    assert_eq!(m.config_hash.len(), 64);

    // no temporary files left behind
    let stray: Vec<_> = std::fs::read_dir(dir.path()).unwrap().filter_map(|e| e.ok()).filter(|e| e.file_name().to_string_lossy().contains(".tmp")).collect();
    assert!(stray.is_empty());
}

#[test]
fn config_hash_is_stable_and_sensitive() {
    let c = ExperimentConfig::default();
    let h = config_hash("solve", &c, &[b"abc"]);
    assert_eq!(h, config_hash("solve", &c, &[b"abc"]));
    assert_ne!(h, config_hash("train", &c, &[b"abc"]));
    assert_ne!(h, config_hash("solve", &c, &[b"abd"]));
    assert_ne!(h, config_hash("solve", &c.clone().with_seed(Some(7)), &[b"abc"]));
    // input boundaries are part of the hash
    assert_ne!(config_hash("solve", &c, &[b"ab", b"c"]), config_hash("solve", &c, &[b"a", b"bc"]));
}

#[test]
fn manifest_hash_repeats_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(run(d.path(), &["--seed", "5", "solve"]).status.success());
    }
    let ha = json(&a.path().join("solve_manifest.json"))["config_hash"].clone();
    let hb = json(&b.path().join("solve_manifest.json"))["config_hash"].clone();
    assert_eq!(ha, hb);
    assert_eq!(json(&a.path().join("solve_manifest.json"))["seed"], 5);
    assert_eq!(std::fs::read(a.path().join("solution.json")).unwrap(), std::fs::read(b.path().join("solution.json")).unwrap());
}

#[test]
fn malformed_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"vessel\": ").unwrap();
    let out = run(dir.path(), &["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let doc = error_doc(&out);
    assert_eq!(doc.error, "parse-error");
    assert_eq!(doc.exit_code, 2);
    let m = json(&dir.path().join("solve_manifest.json"));
    assert_eq!(m["error"]["error"], "parse-error");
}

#[test]
fn invalid_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["trajectory", "--dt", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_doc(&out).error, "config-error");

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"sampler": {"count": 10, "bogus": 1}}"#).unwrap();
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "solve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_doc(&out).message.contains("bogus"));

    let out = run(dir.path(), &["--models", "/nonexistent/models.json", "noise"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(dir.path(), &["solve", "--preset", "table2", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn robot_outside_vessel_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::table2();
    s.pose.y = 50.0;
    let p = dir.path().join("outside.json");
    std::fs::write(&p, s.to_json()).unwrap();
    let out = run(dir.path(), &["solve", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_doc(&out).error, "geometry-violation");
}

#[test]
fn profile_is_symmetric_across_the_vessel() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["profile", "--points", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("profile.csv")).unwrap();
    let headers = r.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {headers:?}"));
    let (iy, iu, iw) = (col("y_c"), col("speed"), col("omega"));
    let rows: Vec<Vec<f64>> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            assert!(rec[col("error")].is_empty());
            rec.iter().map(|v| v.parse().unwrap_or(f64::NAN)).collect()
        })
        .collect();
    assert_eq!(rows.len(), 5);
    for k in 0..2 {
        let (a, b) = (&rows[k], &rows[4 - k]);
        assert!((a[iy] + b[iy]).abs() < 1e-9);
        assert!((a[iu] - b[iu]).abs() < 1e-3 * a[iu]);
        assert!((a[iw] + b[iw]).abs() < 1e-3 * a[iw].abs().max(1.0));
    }
    // fastest at the centerline
    assert!(rows[2][iu] > rows[1][iu] && rows[1][iu] > rows[0][iu]);
}

#[test]
fn config_round_trips_and_checks_modes() {
    let c = ExperimentConfig::default().with_seed(Some(9));
    assert_eq!(ExperimentConfig::from_json(&c.canonical_json()).unwrap(), c);
    assert_eq!(c.noise.seed, 9);
    assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    let mut bad = ExperimentConfig::default();
    bad.fit.modes += 1;
    assert!(bad.validate().is_err());
}

#[test]
fn csv_and_atomic_write() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![FieldRow { x: 1.0, y: 2.0, u_x: 3.0, u_y: 4.0, p: 5.0 }];
    let bytes = to_csv(&rows).unwrap();
    assert_eq!(String::from_utf8(bytes.clone()).unwrap(), "x,y,u_x,u_y,p\n1.0,2.0,3.0,4.0,5.0\n");
    let p = dir.path().join("nested/out.csv");
    write_atomic(&p, &bytes).unwrap();
    write_atomic(&p, b"second").unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), b"second");
    assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
}

#[test]
fn small_noise_sweep() {
    let cfg = NoiseSweepConfig {
        times: vec![5e-4, 5e-3, 5e-2],
        sizes: vec![0.3e-6, 0.5e-6],
        speeds: vec![500.0, 2000.0],
        monte_carlo_runs: 400,
        trials: 6,
        ..Default::default()
    };
    let rows = run_noise_sweep(&cfg, &Discretization::default(), &ModelSet::reference(), &EstimatorSettings::default()).unwrap();
    assert_eq!(rows.len(), 7);
    let times: Vec<_> = rows.iter().filter(|r| r.parameter == "time").collect();
    for w in times.windows(2) {
        // SNR grows linearly with averaging time
        assert!((w[1].snr_array / w[0].snr_array - 10.0).abs() < 1e-9);
        assert!(w[1].err_wall_direction_deg <= w[0].err_wall_direction_deg);
    }
    let reference = times[1];
    let expected = stressnav::noise::snr_array(&SensorDesign::reference(), 1e-6, 310.0, 1e-3);
    assert_eq!(reference.snr_array, expected);
    assert!((reference.snr_array_db - 10.0 * expected.log10()).abs() < 1e-9);
    for r in &rows {
        let mc = r.snr_single_mc.unwrap();
        assert!((mc / r.snr_single - 1.0).abs() < 0.2, "{} {} vs {}", r.parameter, mc, r.snr_single);
    }
    let speeds: Vec<_> = rows.iter().filter(|r| r.parameter == "speed").collect();
    assert!((speeds[1].snr_array / speeds[0].snr_array - 16.0).abs() < 1e-9);
}
