use std::path::Path;
use std::process::{Command, Output};

use lpdim_cli::{run_estimate, RunConfig, CSV_HEADER};

fn lpdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpdim"))
        .args(args)
        .env_remove("LPDIM_JOBS")
        .output()
        .expect("binary runs")
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

#[test]
fn csv_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("full.csv");
    let out = lpdim(&[
        "run", "--scenario", "full", "--p", "2", "--windows", "8,16", "--eps", "1.0,0.5", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), golden("full_p2.csv"));

    let cfg = RunConfig {
        scenario: Some("ker_periodization".into()),
        windows: Some(vec![4, 8]),
        ..RunConfig::default()
    };
    let table = run_estimate(&cfg).unwrap().csv;
    assert_eq!(table, golden("ker_periodization_p1.csv"));
    for text in [table, golden("full_p2.csv")] {
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert!(lines.all(|l| l.split(',').count() == 8));
    }
}

#[test]
fn json_summary_fields() {
    let out = lpdim(&["run", "--scenario", "zero", "--windows", "4,8"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["scenario", "p", "bracket", "grid", "diagnostics"] {
        assert!(v.get(key).is_some(), "{key} missing");
    }
    assert_eq!(v["bracket"]["lo"], 0.0);
    assert_eq!(v["bracket"]["hi"], 0.0);
    assert_eq!(v["grid"].as_array().unwrap().len(), 6);
}

#[test]
fn exit_codes() {
    assert_eq!(lpdim(&["run", "--scenario", "no_such_thing"]).status.code(), Some(2));
    assert_eq!(lpdim(&["list", "--bogus"]).status.code(), Some(2));
    assert_eq!(lpdim(&["run"]).status.code(), Some(2));
    assert_eq!(lpdim(&["run", "--scenario", "full", "--p", "0.5"]).status.code(), Some(2));
    assert_eq!(lpdim(&["run", "--scenario", "full", "--eps", "0.1,0.5"]).status.code(), Some(2));
}

#[test]
fn list_is_machine_readable() {
    let out = lpdim(&["list", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert!(names.len() >= 11);
    assert!(names.contains(&"conv_image_fourier_demo"));
    let text = lpdim(&["list"]);
    assert_eq!(String::from_utf8(text.stdout).unwrap().lines().count(), names.len());
}

#[test]
fn output_is_identical_across_job_counts() {
    let run = |jobs: &str| {
        Command::new(env!("CARGO_BIN_EXE_lpdim"))
            .args(["run", "--scenario", "direct_sum", "--windows", "8,16,32,64", "--jobs", "3"])
            .env("LPDIM_JOBS", jobs)
            .output()
            .unwrap()
    };
    let (a, b) = (run("1"), run("8"));
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(run("zero").status.code(), Some(2));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let json = dir.path().join("out.json");
    std::fs::write(
        &cfg,
        r#"{"spec": {"type": "conv_image", "group": "Z", "support": [[0], [1]], "blocks": [[[1.0]], [[-1.0]]]},
            "scenario": "custom_image", "p": 2, "windows": [8, 16], "eps": [0.5]}"#,
    )
    .unwrap();
    let out = lpdim(&["run", "--config", cfg.to_str().unwrap(), "--windows", "8,16,32", "--out", json.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["scenario"], "custom_image");
    assert_eq!(v["grid"].as_array().unwrap().len(), 3);
    let (lo, hi) = (v["bracket"]["lo"].as_f64().unwrap(), v["bracket"]["hi"].as_f64().unwrap());
    assert!(0.9 < lo && lo <= 1.0 && 1.0 <= hi, "{lo} {hi}");
}

#[test]
fn verify_filters_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let out = lpdim(&["verify", "--only", "young,approximate_units", "--out", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let groups: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["group"].as_str().unwrap()).collect();
    assert!(!groups.is_empty());
    assert!(groups.iter().all(|g| *g == "young" || *g == "approximate_units"));
    assert_eq!(lpdim(&["verify", "--only", "nonsense"]).status.code(), Some(2));
}

#[test]
fn injected_mazur_fault_is_caught() {
    let out = lpdim(&["verify", "--only", "kkt", "--inject-fault", "mazur-sign"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nearest-point-kkt"), "{stderr}");
    assert_eq!(lpdim(&["verify", "--only", "kkt"]).status.code(), Some(0));
}
