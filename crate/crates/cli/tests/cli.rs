use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nml_ddim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nml-ddim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_code(out: &Output) -> String {
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    err["code"].as_str().unwrap().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn complexity_of_bernoulli_at_two() {
    let v = json(&nml_ddim(&[
        "complexity",
        "--family",
        "bernoulli",
        "--n",
        "2",
        "--method",
        "exact",
    ]));
    assert!((v["log_complexity_nats"].as_f64().unwrap() - 0.9163).abs() < 5e-5);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["method"], "exact");
    assert!(v.get("log_complexity_bits").is_none());
}

#[test]
fn bits_only_adds_display_fields() {
    let args = ["complexity", "--family", "multinomial:3", "--n", "10"];
    let nats = json(&nml_ddim(&args));
    let mut with_bits = args.to_vec();
    with_bits.push("--bits");
    let bits = json(&nml_ddim(&with_bits));
    assert_eq!(nats["log_complexity_nats"], bits["log_complexity_nats"]);
    let b = bits["log_complexity_bits"].as_f64().unwrap();
    let n = nats["log_complexity_nats"].as_f64().unwrap();
    assert!((b * std::f64::consts::LN_2 - n).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_two() {
    let out = nml_ddim(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = nml_ddim(&["simulate", "--experiment", "type1_error"]);
    assert_eq!(out.status.code(), Some(2), "simulate needs --seed");
}

#[test]
fn empty_data_file_is_empty_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "empty.jsonl", "");
    let out = nml_ddim(&[
        "learn",
        "--family",
        "fixed:0.5,0.5;bernoulli",
        "--data",
        &data,
    ]);
    assert_eq!(error_code(&out), "EmptySequence");
}

#[test]
fn bad_specs_and_symbols_have_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.csv", "0\n1\n2\n");
    let out = nml_ddim(&["learn", "--family", "bernoulli", "--data", &data]);
    assert_eq!(error_code(&out), "OutOfRangeSymbol");
    let out = nml_ddim(&["learn", "--family", "bernoulli;bernoulli", "--data", &data]);
    assert_eq!(error_code(&out), "DuplicateMember");
    let out = nml_ddim(&["complexity", "--family", "binomial", "--n", "3"]);
    assert_eq!(error_code(&out), "SpecParseError");
    let out = nml_ddim(&["learn", "--family", "bernoulli", "--data", "/no/such/file"]);
    assert_eq!(error_code(&out), "DataFileError");
}

#[test]
fn learn_reads_csv_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(
        dir.path(),
        "x.csv",
        "0\n1\n0\n1\n\n1\n1\n1\n1\n1\n1\n1\n1\n",
    );
    let v = json(&nml_ddim(&[
        "learn",
        "--family",
        "fixed:0.5,0.5;bernoulli",
        "--data",
        &data,
    ]));
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0]["selected_index"], 0);
    assert_eq!(results[1]["selected_index"], 1);
}

#[test]
fn segment_and_tests_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.jsonl", "[0,0,0,0,0,0,1,1,1,1,1,1]\n");
    let v = json(&nml_ddim(&[
        "segment",
        "--family",
        "fixed:0.9,0.1;fixed:0.1,0.9",
        "--data",
        &data,
        "--max-changes",
        "2",
    ]));
    assert_eq!(v["results"][0]["model_sequence"]["change_points"][0], 6);

    let v = json(&nml_ddim(&[
        "test-change",
        "--mode",
        "single",
        "--family",
        "bernoulli",
        "--data",
        &data,
        "--t",
        "6",
    ]));
    assert_eq!(v["results"][0]["decision"], "H1");

    let reference = r#"{"change_points":[],"models":["fixed:0.9,0.1"]}"#;
    let v = json(&nml_ddim(&[
        "test-change",
        "--mode",
        "multiple",
        "--family",
        "fixed:0.9,0.1;fixed:0.1,0.9",
        "--data",
        &data,
        "--reference",
        reference,
    ]));
    assert_eq!(v["results"][0]["decision"], "H1");

    let out = nml_ddim(&[
        "test-change",
        "--mode",
        "multiple",
        "--family",
        "bernoulli",
        "--data",
        &data,
    ]);
    assert_eq!(error_code(&out), "InvalidConfig");
}

#[test]
fn ddim_modes() {
    let v = json(&nml_ddim(&[
        "ddim",
        "--mode",
        "parametric",
        "--family",
        "multinomial:4",
    ]));
    assert_eq!(v["value"], 3.0);
    let v = json(&nml_ddim(&[
        "ddim",
        "--mode",
        "fusion-prior",
        "--family",
        "fixed:0.5,0.5;bernoulli",
        "--weights",
        "0.25,0.75",
    ]));
    assert_eq!(v["value"], 0.75);
    let v = json(&nml_ddim(&[
        "ddim",
        "--mode",
        "concat",
        "--family",
        "bernoulli;multinomial:3",
        "--ratios",
        "0.5,0.5",
    ]));
    assert_eq!(v["value"], 1.5);
}

#[test]
fn deterministic_commands_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.jsonl", "[0,1,1,0,1,1,1,1]\n[1,1]\n");
    let args = [
        "segment",
        "--family",
        "fixed:0.5,0.5;bernoulli",
        "--data",
        &data,
    ];
    assert_eq!(nml_ddim(&args).stdout, nml_ddim(&args).stdout);
}

#[test]
fn simulate_is_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("r{workers}.json"));
        let csv = dir.path().join(format!("r{workers}.csv"));
        let status = nml_ddim(&[
            "simulate",
            "--experiment",
            "convergence-rate",
            "--seed",
            "42",
            "--trials",
            "100",
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ]);
        assert!(status.status.success());
        reports.push((std::fs::read(&out).unwrap(), std::fs::read(&csv).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
    let report: Value = serde_json::from_slice(&reports[0].0).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["seeding"]["master_seed"], 42);
}

#[test]
fn simulate_reads_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "c.json",
        r#"{"experiment": "ddim_slope", "models": ["bernoulli"], "n_grid": [100, 200], "trials": 1}"#,
    );
    let v = json(&nml_ddim(&["simulate", "--config", &config, "--seed", "1"]));
    assert_eq!(v["experiment"], "ddim_slope");
    let out = nml_ddim(&[
        "simulate",
        "--config",
        &config,
        "--experiment",
        "type1_error",
        "--seed",
        "1",
    ]);
    assert_eq!(error_code(&out), "InvalidConfig");
}

#[test]
fn lattice_cap_comes_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_nml-ddim"))
        .args([
            "complexity",
            "--family",
            "multinomial:3",
            "--n",
            "50",
            "--method",
            "exact",
        ])
        .env("NML_DDIM_LATTICE_CAP", "10")
        .output()
        .unwrap();
    let capped = json(&out);
    let free = json(&nml_ddim(&[
        "complexity",
        "--family",
        "multinomial:3",
        "--n",
        "50",
        "--method",
        "exact",
    ]));
    // the recurrence takes over above the cap and agrees with enumeration
    let a = capped["log_complexity_nats"].as_f64().unwrap();
    let b = free["log_complexity_nats"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-9);
}
