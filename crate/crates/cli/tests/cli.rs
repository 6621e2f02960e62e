//! End-to-end runs of the binary: outputs land where declared, byte-stable
//! across runs, and usage errors exit with status 2.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pebble"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("pebble-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn classify_ellipsoid_prints_class() {
    let body = tmp("ellipsoid.json");
    std::fs::write(
        &body,
        r#"{"shape":{"type":"ellipsoid","semi_axes":[1.0,0.8,0.6]},
           "reference":{"type":"center_of_mass"}}"#,
    )
    .unwrap();
    let report = tmp("ellipsoid-report.json");
    let out = bin()
        .args(["classify", "--body"])
        .arg(&body)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("class: {2,2}"), "{text}");
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(record["class"]["saddles"], 2);
}

#[test]
fn classify_ball_fails_with_domain_error() {
    let body = tmp("ball.json");
    std::fs::write(
        &body,
        r#"{"shape":{"type":"truncated_sphere","planes":[]},
           "reference":{"type":"fixed","point":[0.0,0.0,0.0]}}"#,
    )
    .unwrap();
    let out = bin().args(["classify", "--body"]).arg(&body).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-generic"));
}

#[test]
fn usage_errors_exit_two() {
    let out = bin().args(["classify"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metagraph_outputs_are_byte_stable() {
    let run = |json: &PathBuf, dot: &PathBuf| {
        let out = bin()
            .args(["metagraph", "--max-n", "5", "--threads", "1", "--out"])
            .arg(json)
            .arg("--dot")
            .arg(dot)
            .output()
            .unwrap();
        assert!(out.status.success());
    };
    let (j1, d1) = (tmp("mg1.json"), tmp("mg1.dot"));
    let (j2, d2) = (tmp("mg2.json"), tmp("mg2.dot"));
    run(&j1, &d1);
    run(&j2, &d2);
    assert_eq!(std::fs::read(&j1).unwrap(), std::fs::read(&j2).unwrap());
    assert_eq!(std::fs::read(&d1).unwrap(), std::fs::read(&d2).unwrap());
    // key-sorted outputs are identical at any thread count
    let (j4, d4) = (tmp("mg4.json"), tmp("mg4.dot"));
    let out = bin()
        .args(["metagraph", "--max-n", "5", "--threads", "2", "--out"])
        .arg(&j4)
        .arg("--dot")
        .arg(&d4)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(&j1).unwrap(), std::fs::read(&j4).unwrap());
    let dot_text = std::fs::read_to_string(&d1).unwrap();
    assert!(dot_text.contains("penwidth=3"), "saddle-saddle styling missing");
}

#[test]
fn verify_lemma_reports_clean_at_five() {
    let out = bin().args(["verify-lemma", "--max-n", "5"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("failures: 0"), "{text}");
}

#[test]
fn normalform_curves_and_scan() {
    let out = bin()
        .args(["normalform", "curves", "--mu2", "0.2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("heteroclinic mu1=0.02519842"), "{text}");
    let csv = tmp("regions.csv");
    let out = bin()
        .args(["normalform", "scan", "--box", "0.1", "--grid", "11", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success());
    let body = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(body.lines().count(), 122); // header + 11*11
    assert!(body.contains("no-upper-pair"));
    assert!(body.contains("saddles-unconnected-right"));
}

#[test]
fn truncate_sweep_small_grid() {
    let csv = tmp("sweep.csv");
    let out = bin()
        .args(["truncate", "sweep", "--grid", "5", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(body.lines().count(), 26);
    assert!(body.contains(",A,4,1,"));
    assert!(body.contains(",5,1,"));
}
