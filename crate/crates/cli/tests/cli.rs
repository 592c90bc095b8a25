use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn recourse(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recourse")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = recourse(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

/// Runs a failing command and returns its single stderr line.
fn fails(dir: &Path, args: &[&str]) -> String {
    let out = recourse(dir, args);
    assert!(!out.status.success(), "{args:?} should fail");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    err.trim_end().to_string()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// Generates `kind` data and trains a model on it, inside `dir`.
fn setup(dir: &Path, kind: &str, size: &str, extra: &[&str]) {
    let mut args = vec!["generate", "--kind", kind, "--size", size, "--seed", "1", "--out", "."];
    args.extend_from_slice(extra);
    ok(dir, &args);
    ok(dir, &["train", "--data", "data.csv", "--schema", "schema.toml", "--out", "."]);
}

const INPUTS: [&str; 6] = ["--data", "data.csv", "--schema", "schema.toml", "--model", "model.json"];

fn with_inputs<'a>(cmd: &'a str, rest: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(&INPUTS);
    v.extend_from_slice(rest);
    v
}

#[test]
fn train_on_separable_gaussians() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "gaussians", "200", &["--separation", "8"]);
    let s = json(d.join("train_summary.json"));
    assert_eq!(s["accuracy"], 1.0);
    assert!((s["min_abs_decision"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    let first = read(d.join("model.json"));
    ok(d, &["train", "--data", "data.csv", "--schema", "schema.toml", "--out", "."]);
    assert_eq!(first, read(d.join("model.json")));
}

#[test]
fn missing_schema_is_reported_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let err = fails(dir.path(), &["train", "--data", "data.csv", "--schema", "missing/schema.toml"]);
    assert!(err.starts_with("error[io]: missing/schema.toml"), "{err}");
    let err = fails(dir.path(), &["train", "--data", "data.csv"]);
    assert!(err.starts_with("error[config]: missing --schema"), "{err}");
}

#[test]
fn explain_diabetes_changes_only_actionable_features() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "diabetes", "300", &[]);
    ok(d, &with_inputs("explain", &["--target", "-1", "--out", "."]));
    let report = json(d.join("explain.json"));
    let instances = report["instances"].as_array().unwrap();
    assert!(!instances.is_empty());
    for inst in instances {
        assert_eq!(inst["prediction"], 1);
        for change in inst["changed"].as_array().unwrap() {
            let f = change["feature"].as_str().unwrap();
            assert!(f == "glucose" || f == "bmi", "{f} changed");
        }
    }
    let text = read(d.join("explain.txt"));
    assert!(text.contains("Feature") && text.contains("Original") && text.contains("CF"));
    assert!(text.contains("glucose") && !text.contains("\npregnancies "));
    assert_eq!(report["weights"]["age"], "inf");
}

#[test]
fn explain_row_already_on_target_side_is_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "gaussians", "40", &[]);
    let model = json(d.join("model.json"));
    let w: Vec<f64> = model["weights"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let b = model["intercept"].as_f64().unwrap();
    let data = read(d.join("data.csv"));
    let (row, label) = data
        .lines()
        .skip(1)
        .enumerate()
        .find_map(|(i, l)| {
            let v: Vec<f64> = l.split(',').map(|t| t.parse().unwrap()).collect();
            let dec = w[0] * v[0] + w[1] * v[1] + b;
            (dec >= 1.0).then_some((i, "1"))
        })
        .unwrap();
    let row = row.to_string();
    ok(d, &with_inputs("explain", &["--rows", &row, "--target", label, "--out", "."]));
    let inst = &json(d.join("explain.json"))["instances"][0];
    assert_eq!(inst["objective"], 0.0);
    assert_eq!(inst["x"], inst["x_prime"]);
    assert_eq!(inst["n_changed"], 0);
}

#[test]
fn sparse_report_counts_changed_features() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "bar", "200", &[]);
    ok(d, &with_inputs("explain", &["--variant", "sparse", "--rows", "0-4", "--out", "."]));
    let summary = read(d.join("explain_summary.csv"));
    assert!(summary.lines().next().unwrap().contains("n_changed"));
    assert!(read(d.join("explain.txt")).contains("changed features"));
}

#[test]
fn bench_two_methods_layout() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "gaussians", "60", &[]);
    ok(d, &with_inputs("bench", &["--methods", "plain,nearest_sv", "--rows", "0-9", "--out", "."]));
    let summary = read(d.join("bench_summary.csv"));
    assert_eq!(summary.lines().count(), 3);
    let plot = read(d.join("bench_plot.csv"));
    assert_eq!(plot.lines().count(), 1 + 10 * 2);
    assert!(plot.lines().next().unwrap().starts_with("instance,method,"));
    let text = read(d.join("bench.txt"));
    assert!(text.contains("plain") && text.contains("nearest_sv"));
}

#[test]
fn bench_unknown_method_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "gaussians", "20", &[]);
    let err = fails(d, &with_inputs("bench", &["--methods", "plain,dice"]));
    assert!(err.starts_with("error[unknown_method]"), "{err}");
    for m in ["plain", "correlated", "plausible", "sparse", "sparse_correlated", "nearest_sv"] {
        assert!(err.contains(m), "{err}");
    }
}

#[test]
fn audit_of_planted_bias() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "bar", "600", &["--bias", "3"]);
    ok(d, &with_inputs("audit", &["--out", "."]));
    let report = json(d.join("audit.json"));
    assert_eq!(report["variant"], "correlated");
    let white = report["categorical"].as_array().unwrap().iter().find(|c| c["feature"] == "race_white").unwrap();
    assert!(white["percent"].as_f64().unwrap() > 0.0);
    let text = read(d.join("audit.txt"));
    assert!(text.contains("protected features are not frozen"));
    assert!(text.contains("variant correlated"));
    assert!(text.contains("Counterfactual mean changes") && text.contains("Attribution means"));
}

#[test]
fn audit_with_no_undesirable_predictions_is_empty_cohort() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "gaussians", "20", &[]);
    std::fs::write(
        d.join("always.json"),
        r#"{"format_version":1,"feature_names":["x1","x2"],"weights":[0.001,0],"intercept":1000,"gamma":1}"#,
    )
    .unwrap();
    let err =
        fails(d, &["audit", "--data", "data.csv", "--schema", "schema.toml", "--model", "always.json", "--out", "."]);
    assert!(err.starts_with("error[empty_cohort]"), "{err}");
    assert!(!d.join("audit.txt").exists());
}

#[test]
fn model_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "gaussians", "20", &[]);
    let text = read(d.join("model.json")).replace("\"format_version\": 1", "\"format_version\": 9");
    std::fs::write(d.join("v9.json"), text).unwrap();
    let err = fails(d, &["explain", "--data", "data.csv", "--schema", "schema.toml", "--model", "v9.json"]);
    assert!(err.starts_with("error[format_version]"), "{err}");

    std::fs::write(
        d.join("wide.json"),
        r#"{"format_version":1,"feature_names":["x1","x2","x3"],"weights":[1,0,0],"intercept":0,"gamma":1}"#,
    )
    .unwrap();
    let err = fails(d, &["explain", "--data", "data.csv", "--schema", "schema.toml", "--model", "wide.json"]);
    assert!(err.starts_with("error[model]"), "{err}");
}

#[test]
fn config_file_precedence_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "gaussians", "40", &[]);
    std::fs::write(
        d.join("run.toml"),
        "data = \"data.csv\"\nschema = \"schema.toml\"\nmodel = \"model.json\"\nseed = 11\ntrials = 5\nrows = \"0-2\"\n",
    )
    .unwrap();
    ok(d, &["explain", "--config", "run.toml", "--trials", "9", "--out", "out"]);
    let cfg = json(d.join("out/config.json"));
    assert_eq!(cfg["seed"], 11);
    assert_eq!(cfg["trials"], 9);
    assert_eq!(cfg["rows"], serde_json::json!([0, 1, 2]));
    assert_eq!(json(d.join("out/explain.json"))["config"], cfg);
    assert!(read(d.join("out/explain.txt")).contains("\"trials\":9"));
}

#[test]
fn weights_and_freeze_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "gaussians", "40", &[]);
    std::fs::write(d.join("w.toml"), "x1 = 4\n").unwrap();
    ok(d, &with_inputs("explain", &["--weights", "w.toml", "--freeze", "x2", "--rows", "0-5", "--out", "."]));
    let report = json(d.join("explain.json"));
    assert_eq!(report["weights"]["x1"], 4.0);
    assert_eq!(report["weights"]["x2"], "inf");
    for inst in report["instances"].as_array().unwrap() {
        if inst["status"] == "ok" {
            assert_eq!(inst["x"][1], inst["x_prime"][1]);
        }
    }
    let err = fails(d, &with_inputs("explain", &["--freeze", "x9"]));
    assert!(err.starts_with("error[config]"), "{err}");
}

#[test]
fn dump_programs_writes_text_programs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, "gaussians", "20", &[]);
    ok(d, &with_inputs("explain", &["--rows", "0,1", "--dump-programs", "--out", "."]));
    let p = read(d.join("programs/row_0.txt"));
    assert!(p.starts_with("variables 2"));
    assert!(p.contains("ineq"));
}

#[test]
fn label_coercion_flag() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("s.toml"), "label = \"y\"\n[[feature]]\nname = \"a\"\n").unwrap();
    std::fs::write(d.join("d.csv"), "a,y\n-2,0\n-1,0\n1,1\n2,1\n").unwrap();
    let err = fails(d, &["train", "--data", "d.csv", "--schema", "s.toml"]);
    assert!(err.starts_with("error[parse]") && err.contains("--coerce-labels"), "{err}");
    ok(d, &["train", "--data", "d.csv", "--schema", "s.toml", "--coerce-labels", "--out", "."]);
    assert_eq!(json(d.join("train_summary.json"))["accuracy"], 1.0);
}
