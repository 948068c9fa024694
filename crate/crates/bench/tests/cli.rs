//! End-to-end runs of the command-line harness on small inputs.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tsunami-bench"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small dataset and workload in `dir`.
fn prepare(dir: &Path) -> (String, String) {
    let data = dir.join("data.bin");
    let workload = dir.join("w.json");
    let o = run(&["gen-data", "--scenario", "skewed_correlated", "--rows", "30000", "--seed", "4", "--out", s(&data)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["gen-workload", "--scenario", "skewed_correlated", "--data", s(&data), "--queries", "60", "--out", s(&workload)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (s(&data).to_string(), s(&workload).to_string())
}

const FIXED_WEIGHTS: [&str; 4] = ["--w0", "150", "--w1", "1.2"];

#[test]
fn gen_data_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    for p in [&a, &b] {
        let o = run(&["gen-data", "--scenario", "uniform", "--rows", "5000", "--seed", "9", "--out", s(p)]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn cyclic_spec_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let out = dir.path().join("out.bin");
    std::fs::write(
        &spec,
        r#"{"n": 100, "dims": [
            {"kind": "linear", "base": 1, "slope": 1.0, "intercept": 0.0, "noise": 0.0},
            {"kind": "linear", "base": 0, "slope": 1.0, "intercept": 0.0, "noise": 0.0}]}"#,
    )
    .unwrap();
    let o = run(&["gen-data", "--spec", s(&spec), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn bench_reports_every_index_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (data, workload) = prepare(dir.path());
    let mut reports = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("r{i}.json"));
        let mut args = vec!["bench", "--data", &data, "--workload", &workload, "--passes", "1", "--out", s(&out)];
        args.extend(FIXED_WEIGHTS);
        let o = run(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        reports.push(serde_json::from_str::<Value>(&std::fs::read_to_string(&out).unwrap()).unwrap());
    }
    let entries = reports[0]["entries"].as_array().unwrap();
    let names: Vec<&str> = entries.iter().map(|e| e["index"].as_str().unwrap()).collect();
    assert_eq!(names, ["tsunami", "flood", "kdtree", "clustered", "fullscan"]);
    // Everything except wall-clock numbers is reproducible.
    let strip = |r: &Value| {
        let mut r = r.clone();
        for e in r["entries"].as_array_mut().unwrap() {
            let e = e.as_object_mut().unwrap();
            e.retain(|k, _| k == "index" || k == "index_bytes" || k == "stats");
            if let Some(stats) = e.get_mut("stats").and_then(Value::as_object_mut) {
                stats.remove("build");
            }
        }
        r
    };
    assert_eq!(strip(&reports[0]), strip(&reports[1]));
    assert_eq!(reports[0]["environment"], reports[1]["environment"]);
}

#[test]
fn corrupted_index_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let (data, workload) = prepare(dir.path());
    let out = dir.path().join("r.json");
    let mut args = vec!["bench", "--data", &data, "--workload", &workload, "--indexes", "tsunami", "--inject-fault", "--out", s(&out)];
    args.extend(FIXED_WEIGHTS);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("expected") && err.contains("got"), "{err}");
    assert!(!out.exists());
}

#[test]
fn unknown_index_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (data, workload) = prepare(dir.path());
    let o = run(&["bench", "--data", &data, "--workload", &workload, "--indexes", "btree"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shift_and_ablate_write_their_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (data, workload) = prepare(dir.path());
    let shifted = dir.path().join("b.json");
    let o = run(&["gen-workload", "--scenario", "skewed", "--data", &data, "--queries", "60", "--seed", "5", "--out", s(&shifted)]);
    assert!(o.status.success());

    let out = dir.path().join("shift.json");
    let mut args = vec!["shift", "--data", &data, "--workload-a", &workload, "--workload-b", s(&shifted), "--passes", "1", "--out", s(&out)];
    args.extend(FIXED_WEIGHTS);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for key in ["sort_seconds", "optimize_seconds"] {
        assert!(r["rebuild"][key].is_number(), "missing {key}");
    }
    assert!(r["restored_fraction"].as_f64().unwrap() > 0.0);

    let out = dir.path().join("ablate.json");
    let trace = dir.path().join("trace.jsonl");
    let mut args = vec!["ablate", "--data", &data, "--workload", &workload, "--passes", "1", "--trace", s(&trace), "--out", s(&out)];
    args.extend(FIXED_WEIGHTS);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let variants: Vec<&str> = r["variants"].as_array().unwrap().iter().map(|v| v["index"].as_str().unwrap()).collect();
    assert_eq!(variants, ["tsunami", "gridtree-only", "augmented-only", "flood"]);
    let optimizers: Vec<&str> = r["optimizers"].as_array().unwrap().iter().map(|v| v["optimizer"].as_str().unwrap()).collect();
    assert_eq!(optimizers, ["agd", "gd", "agd-ni", "hill-climb"]);
    assert!(r["cost_model_mean_relative_error"].is_number());
    let lines = std::fs::read_to_string(&trace).unwrap();
    let first: Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    for key in ["iteration", "skeleton", "partitions", "cost", "optimizer"] {
        assert!(first.get(key).is_some(), "trace lacks {key}");
    }
}
