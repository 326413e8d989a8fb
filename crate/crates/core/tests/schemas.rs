//! Every file the commands write validates against its documented schema.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{Map, Value};

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

fn load(name: &str) -> Value {
    let text = std::fs::read_to_string(schema_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    serde_json::from_str(&text).unwrap()
}

/// Replaces references to sibling schema files with their contents.
fn inline(v: &mut Value) {
    match v {
        Value::Object(map) => {
            if let Some(Value::String(r)) = map.get("$ref") {
                if r.ends_with(".schema.json") {
                    let mut sub = load(r);
                    inline(&mut sub);
                    let sub = sub.as_object_mut().unwrap();
                    sub.remove("$schema");
                    sub.remove("$id");
                    *map = sub.clone();
                    return;
                }
            }
            map.values_mut().for_each(inline);
        }
        Value::Array(items) => items.iter_mut().for_each(inline),
        _ => {}
    }
}

fn validator(name: &str) -> jsonschema::Validator {
    let mut s = load(&format!("{name}.schema.json"));
    inline(&mut s);
    jsonschema::validator_for(&s).unwrap_or_else(|e| panic!("{name} is not a valid schema: {e}"))
}

fn assert_valid(schema: &str, doc: &Value, what: &str) {
    let v = validator(schema);
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{what} against {schema}: {errors:#?}");
}

fn cell(text: &str) -> Value {
    match text {
        "" => Value::Null,
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => match text.parse::<i64>() {
            Ok(i) => Value::from(i),
            Err(_) => text.parse::<f64>().map(Value::from).unwrap_or_else(|_| Value::String(text.into())),
        },
    }
}

fn check_csv(path: &Path, schema: &str) -> usize {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    let v = validator(schema);
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        let row: Map<String, Value> = headers.iter().zip(rec.iter()).map(|(h, c)| (h.to_string(), cell(c))).collect();
        let row = Value::Object(row);
        let errors: Vec<String> = v.iter_errors(&row).map(|e| format!("{} at {}", e, e.instance_path)).collect();
        assert!(errors.is_empty(), "{} row {rows} against {schema}: {errors:#?}", path.display());
        rows += 1;
    }
    rows
}

fn check_json(path: &Path, schema: &str) {
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_valid(schema, &doc, &path.display().to_string());
}

fn schema_for(file: &str) -> Option<(&'static str, bool)> {
    Some(match file {
        "solution.json" => ("solution", false),
        "models.json" => ("models", false),
        "metrics.json" => ("metrics", false),
        "trajectory_summary.json" => ("trajectory_summary", false),
        "config.json" => ("config", false),
        "field.csv" => ("field_row", true),
        "profile.csv" => ("profile_row", true),
        "dataset.csv" => ("dataset_row", true),
        "trajectory.csv" => ("trajectory_row", true),
        "noise_sweep.csv" => ("noise_sweep_row", true),
        "oscillator_trace.csv" => ("oscillator_trace_row", true),
        f if f.ends_with("_manifest.json") => ("manifest", false),
        f if f.starts_with("scatter_") && f.ends_with(".csv") => ("scatter_row", true),
        _ => return None,
    })
}

fn stressnav(dir: &Path, config: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_stressnav"))
        .arg("--out-dir")
        .arg(dir)
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .unwrap()
}

const SMALL: &str = r#"{
  "sampler": {"count": 24, "train": 16, "advance": 8},
  "trajectory": {"duration": 0.002, "dt": 0.001, "estimate_every": 1},
  "noise": {"times": [0.005], "sizes": [4e-7], "speeds": [1000.0], "monte_carlo_runs": 50, "trials": 2, "trace_points": 50}
}"#;

#[test]
fn schemas_compile() {
    for entry in std::fs::read_dir(schema_dir()).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(".schema.json") {
            validator(stem);
        }
    }
}

#[test]
fn bundled_inputs_match_schemas() {
    let scenario: Value = serde_json::from_str(stressnav::experiment::TABLE2_SCENARIO_JSON).unwrap();
    assert_valid("scenario", &scenario, "bundled scenario");
    let curved: Value = serde_json::from_str(&stressnav::scenario::CurvedVessel::default().preset_scenario().to_json()).unwrap();
    assert_valid("scenario", &curved, "curved preset");
    let models: Value = serde_json::from_str(&stressnav::estimators::ModelSet::reference().to_json()).unwrap();
    assert_valid("models", &models, "reference models");
    let config: Value = serde_json::from_str(&stressnav::experiment::ExperimentConfig::default().canonical_json()).unwrap();
    assert_valid("config", &config, "default config");
}

#[test]
fn command_outputs_match_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = d.join("config.json");
    std::fs::write(&config, SMALL).unwrap();
    let models = d.join("models.json");
    let runs: Vec<Vec<&str>> = vec![
        vec!["solve", "--field", "6,4", "--profile"],
        vec!["profile", "--points", "3"],
        vec!["dataset"],
        vec!["train"],
        vec!["--models", models.to_str().unwrap(), "eval"],
        vec!["trajectory"],
        vec!["noise"],
    ];
    for args in &runs {
        let out = stressnav(d, &config, args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }

    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for entry in std::fs::read_dir(d).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let (schema, is_csv) = schema_for(&name).unwrap_or_else(|| panic!("undocumented output {name}"));
        let rows = if is_csv {
            check_csv(&path, schema)
        } else {
            check_json(&path, schema);
            1
        };
        assert!(rows > 0, "{name} is empty");
        seen.insert(name, rows);
    }
    for expected in [
        "solution.json",
        "field.csv",
        "profile.csv",
        "dataset.csv",
        "models.json",
        "metrics.json",
        "scatter_relpos.csv",
        "trajectory.csv",
        "trajectory_summary.json",
        "noise_sweep.csv",
        "oscillator_trace.csv",
        "solve_manifest.json",
        "noise_manifest.json",
    ] {
        assert!(seen.contains_key(expected), "missing {expected}; have {:?}", seen.keys());
    }
    assert_eq!(seen["dataset.csv"], 24);
    assert_eq!(seen["trajectory.csv"], 3);
}

#[test]
fn error_outputs_match_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bad = d.join("bad.json");
    std::fs::write(&bad, "{]").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_stressnav")).arg("--out-dir").arg(d).args(["solve"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let line = String::from_utf8_lossy(&out.stderr).lines().rev().find(|l| l.starts_with('{')).unwrap().to_string();
    assert_valid("error", &serde_json::from_str(&line).unwrap(), "stderr error document");
    check_json(&d.join("solve_manifest.json"), "manifest");

    // a bad configuration still leaves a manifest behind
    let cfg = d.join("cfg.json");
    std::fs::write(&cfg, r#"{"noise": {"trials": "many"}}"#).unwrap();
    let out = stressnav(d, &cfg, &["noise"]);
    assert_eq!(out.status.code(), Some(2));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(d.join("noise_manifest.json")).unwrap()).unwrap();
    assert_valid("manifest", &m, "manifest after config error");
    assert_eq!(m["error"]["error"], "config-error");
}

#[test]
fn manifest_replays_the_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let config = a.path().join("config.json");
    std::fs::write(&config, r#"{"sampler": {"count": 12, "train": 8, "advance": 4}}"#).unwrap();
    let out = stressnav(a.path(), &config, &["--seed", "77", "dataset"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // replay with only the manifest: same seed, same config, same bytes
    let manifest = a.path().join("dataset_manifest.json");
    let out = stressnav(b.path(), &manifest, &["dataset"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ma: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    let mb: Value = serde_json::from_str(&std::fs::read_to_string(b.path().join("dataset_manifest.json")).unwrap()).unwrap();
    assert_eq!(ma["config"], mb["config"]);
    assert_eq!(mb["seed"], 77);
    assert_eq!(std::fs::read(a.path().join("dataset.csv")).unwrap(), std::fs::read(b.path().join("dataset.csv")).unwrap());
}

#[test]
fn schemas_reject_bad_documents() {
    let mut scenario: Value = serde_json::from_str(stressnav::experiment::TABLE2_SCENARIO_JSON).unwrap();
    scenario["robot"]["kind"] = "square".into();
    assert!(!validator("scenario").is_valid(&scenario));

    let mut config: Value = serde_json::from_str(&stressnav::experiment::ExperimentConfig::default().canonical_json()).unwrap();
    config["sampler"]["bogus"] = 1.into();
    assert!(!validator("config").is_valid(&config));

    let row = serde_json::json!({"x": 1.0, "y": 2.0, "u_x": 0.0, "u_y": 0.0});
    assert!(!validator("field_row").is_valid(&row), "missing pressure column accepted");
    let row = serde_json::json!({"t": 0.0, "x": 1.0, "v": 0.0, "a": 0.0, "extra": 1});
    assert!(!validator("oscillator_trace_row").is_valid(&row), "unknown column accepted");
}
