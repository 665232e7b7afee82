// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pwcluster(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwcluster"))
        .args(args)
        .output()
        .unwrap()
}

fn spec() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/three_classes.toml")
        .to_string_lossy()
        .into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(pwcluster(&["--help"]).status.code(), Some(0));
    assert_eq!(pwcluster(&["--version"]).status.code(), Some(0));
    assert_eq!(pwcluster(&["cluster", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(pwcluster(&[]).status.code(), Some(1));
    assert_eq!(pwcluster(&["cluster", "--m", "2"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "in.jsonl",
        "{\"id\":\"a\",\"values\":[1,2,3]}\n",
    );
    let o = pwcluster(&["delta", "--input", &input, "--pair", "a", "--lambda", "0.2"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let o = pwcluster(&[
        "changepoints",
        "--input",
        &input,
        "--lambda",
        "1.5",
        "--out",
        "x.json",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn cluster_count_above_sample_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "in.jsonl",
        "{\"id\":\"a\",\"values\":[0,1,0,1,0,1,0,1,0,1,0,1]}\n{\"id\":\"b\",\"values\":[1,1,1,1,1,1,1,1,1,1,1,1]}\n",
    );
    let out = dir.path().join("r.json");
    let o = pwcluster(&[
        "cluster",
        "--input",
        &input,
        "--m",
        "3",
        "--lambda",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ne!(o.status.code(), Some(0));
    let msg = stderr(&o);
    assert!(msg.contains("m <= N"), "{msg}");
    assert_eq!(msg.lines().count(), 1);
    assert!(!out.exists());
}

#[test]
fn data_errors_exit_2_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "bad.jsonl",
        "{\"id\":\"a\",\"values\":[1]}\n{\"id\":\"b\",\"values\":[1,}\n",
    );
    let o = pwcluster(&[
        "cluster", "--input", &input, "--m", "1", "--lambda", "0.2", "--out", "r.json",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.jsonl:2:"), "{}", stderr(&o));
    let o = pwcluster(&[
        "cluster",
        "--input",
        "/nonexistent.jsonl",
        "--m",
        "1",
        "--lambda",
        "0.2",
        "--out",
        "r.json",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_internal_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "in.jsonl",
        "{\"id\":\"a\",\"values\":[0,1,0,1,0,1,0,1,0,1,0,1]}\n",
    );
    let o = pwcluster(&[
        "changepoints",
        "--input",
        &input,
        "--lambda",
        "0.25",
        "--out",
        "/nonexistent-dir/r.json",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn generate_cluster_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    let spec = spec();
    assert!(pwcluster(&[
        "generate",
        "--spec",
        &spec,
        "--n",
        "2048",
        "--seed",
        "4",
        "--out",
        &p("s.jsonl")
    ])
    .status
    .success());
    let truth = p("s.jsonl.truth.json");

    let o = pwcluster(&[
        "cluster",
        "--input",
        &p("s.jsonl"),
        "--m",
        "3",
        "--lambda",
        "0.3",
        "--out",
        &p("c.json"),
        "--truth",
        &truth,
    ]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning: lambda"), "{}", stderr(&o));

    let o = pwcluster(&[
        "cluster",
        "--input",
        &p("s.jsonl"),
        "--m",
        "3",
        "--lambda",
        "0.1",
        "--out",
        &p("c.json"),
        "--truth",
        &truth,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).is_empty());
    let o = pwcluster(&["evaluate", "--report", &p("c.json"), "--truth", &truth]);
    assert!(o.status.success());
    assert_eq!(
        String::from_utf8_lossy(&o.stdout).trim(),
        "exact_match=true pair_accuracy=1"
    );

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p("c.json")).unwrap()).unwrap();
    let body = &report["body"];
    assert_eq!(body["ids"].as_array().unwrap().len(), 9);
    assert_eq!(body["distance_matrix"][0][0], 0.0);
    assert_eq!(body["normalization"], serde_json::Value::Null);
    assert_eq!(
        body["input"]["normalization"]["epsilon"],
        1.0 / 4294967296.0
    );
    assert!(report["timings"]["total"].as_f64().unwrap() > 0.0);

    // Tampering with the body is detected.
    let tampered = std::fs::read_to_string(p("c.json"))
        .unwrap()
        .replacen("\"m\": 3", "\"m\": 2", 1);
    std::fs::write(p("t.json"), tampered).unwrap();
    let o = pwcluster(&["evaluate", "--report", &p("t.json"), "--truth", &truth]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn delta_prints_a_symmetric_value() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    assert!(pwcluster(&[
        "generate",
        "--spec",
        &spec(),
        "--n",
        "1024",
        "--seed",
        "1",
        "--out",
        &p("s.jsonl")
    ])
    .status
    .success());
    let ab = pwcluster(&[
        "delta",
        "--input",
        &p("s.jsonl"),
        "--pair",
        "a1,c2",
        "--lambda",
        "0.1",
    ]);
    let ba = pwcluster(&[
        "delta",
        "--input",
        &p("s.jsonl"),
        "--pair",
        "c2,a1",
        "--lambda",
        "0.1",
    ]);
    assert_eq!(ab.stdout, ba.stdout);
    let v: f64 = String::from_utf8_lossy(&ab.stdout).trim().parse().unwrap();
    assert!(v > 0.0 && v < 4.0);
    let aa = pwcluster(&[
        "delta",
        "--input",
        &p("s.jsonl"),
        "--pair",
        "a1,a1",
        "--lambda",
        "0.1",
    ]);
    assert_eq!(String::from_utf8_lossy(&aa.stdout).trim(), "0");
    let o = pwcluster(&[
        "delta",
        "--input",
        &p("s.jsonl"),
        "--pair",
        "a1,zz",
        "--lambda",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.toml",
        &format!(
            "specs = {:?}\nn_list = [256]\nseeds = [1]\nlambda = 0.1\nm = 3\n",
            spec()
        ),
    );
    let o = pwcluster(&["experiment", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout).into_owned();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,seeds,same_class_mean,cross_class_mean,exact_match_rate,pair_accuracy_mean"
    );
    assert!(lines.next().unwrap().starts_with("256,1,"));
}
