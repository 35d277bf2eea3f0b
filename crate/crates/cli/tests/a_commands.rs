//! End-to-end runs of the binary against the sample inputs in `data/`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oppenheim_runner::validate_envelope;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn oppenheim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oppenheim")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn missing_pair_file_is_invalid_input_naming_the_path() {
    let out = oppenheim(&["count", "--pair", "/nonexistent/pair.json", "--T", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/pair.json"));
}

#[test]
fn malformed_arguments_are_invalid_input() {
    let pair = data("flagship.json");
    let out = oppenheim(&["count", "--pair", pair.to_str().unwrap(), "--T", "10", "--I", "1,-1"]);
    assert_eq!(out.status.code(), Some(3));
    let out = oppenheim(&["count", "--pair", pair.to_str().unwrap(), "--T", "10", "--shards", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oversized_radius_hits_the_guard() {
    let pair = data("flagship.json");
    let out = oppenheim(&["count", "--pair", pair.to_str().unwrap(), "--T", "1e6"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn count_writes_a_validating_report() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("pair.json");
    std::fs::copy(data("flagship.json"), &pair).unwrap();
    let report = dir.path().join("report.json");
    let out = oppenheim(&[
        "--out",
        report.to_str().unwrap(),
        "count",
        "--pair",
        pair.to_str().unwrap(),
        "--T",
        "30",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    let env = validate_envelope(&text).expect("hash matches");
    assert_eq!(env.command, "count");
    assert!(env.report["N"].as_u64().unwrap() > 0);
    assert!(env.wall_time >= 0.0);

    // Editing the input invalidates the recorded hash.
    let edited = std::fs::read_to_string(&pair).unwrap().replace("cbrt(2)", "cbrt(3)");
    std::fs::write(&pair, edited).unwrap();
    assert!(validate_envelope(&text).is_err());
}

#[test]
fn csv_output_sits_next_to_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("scan.json");
    let out = oppenheim(&[
        "--out",
        report.to_str().unwrap(),
        "--format",
        "csv",
        "count-scan",
        "--pair",
        data("flagship.json").to_str().unwrap(),
        "--Ts",
        "10,20,30",
    ]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_path(dir.path().join("scan.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["T", "N", "boundary_hits"]);
    let counts: Vec<u64> = reader.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(counts.len(), 3);
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn seeded_runs_repeat_and_seeds_matter() {
    let run = |seed: &str| {
        let mut v = stdout_json(&oppenheim(&[
            "--seed", seed, "avg-alpha", "--p", "3", "--q", "2", "--t", "1", "--delta", "1", "--samples", "1000",
        ]));
        v.as_object_mut().unwrap().remove("wall_time");
        v
    };
    assert_eq!(run("7"), run("7"));
    assert_ne!(run("7")["report"]["mean"], run("8")["report"]["mean"]);
}

#[test]
fn classify_reports_rational_pair() {
    let v = stdout_json(&oppenheim(&["classify", "--pair", data("rational.json").to_str().unwrap()]));
    assert_eq!(v["report"]["label"], "TypeI(2)");
    assert_eq!(v["report"]["kernel_signature"]["pos"], 2);
    assert_eq!(v["report"]["kernel_signature"]["neg"], 1);
}

#[test]
fn alpha_of_the_standard_lattice_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let basis = dir.path().join("id.json");
    std::fs::write(&basis, "[[1,0,0],[0,1,0],[0,0,1]]").unwrap();
    let v = stdout_json(&oppenheim(&["alpha", "--basis", basis.to_str().unwrap()]));
    assert_eq!(v["report"]["value"], 1.0);
}

#[test]
fn lie_check_passes_exactly() {
    let v = stdout_json(&oppenheim(&["lie-check", "--p", "3", "--q", "2"]));
    assert_eq!(v["report"]["all_passed"], true);
}

#[test]
fn sample_inputs_parse() {
    let g0 = data("g0_generic.json");
    let v = stdout_json(&oppenheim(&[
        "equi-check", "--p", "3", "--q", "2", "--g0", g0.to_str().unwrap(),
        "--bump", data("bump_dense.json").to_str().unwrap(), "--ts", "1", "--samples", "1000",
    ]));
    assert!(v["report"]["integral"].as_f64().unwrap() > 0.0);
    let v = stdout_json(&oppenheim(&[
        "jf-verify", "--kernel", data("kernel.json").to_str().unwrap(), "--target", "1,0.1,1", "--ts", "1", "--samples", "1000",
    ]));
    assert_eq!(v["report"]["rows"].as_array().unwrap().len(), 1);
    let v = stdout_json(&oppenheim(&[
        "limit-verify", "--limit", data("limit.json").to_str().unwrap(), "--Ts", "10", "--samples", "1000",
    ]));
    assert!(v["report"]["rhs"].as_f64().unwrap() > 0.0);
}

#[test]
fn counterexample_witnesses_are_valid() {
    let v = stdout_json(&oppenheim(&["counterexample", "--beta", "golden", "--Ts", "40"]));
    let row = &v["report"]["rows"][0];
    assert_eq!(row["witnesses"]["violations"], 0);
    assert!(row["witnesses"]["count"].as_u64().unwrap() > 0);
}
