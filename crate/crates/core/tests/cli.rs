use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn signdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_signdim"))
        .args(args)
        .output()
        .unwrap()
}

fn signdim_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_signdim"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

const SECOND_PATTERN: &str = "comment_id,voter_id,vote\n\
    c1,v1,up\nc1,v2,up\nc1,v3,up\n\
    c2,v1,up\nc2,v2,down\nc2,v3,up\n\
    c3,v1,up\nc3,v2,up\nc3,v3,up\n";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn analyze_reports_two_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let votes = write(dir.path(), "pattern.csv", SECOND_PATTERN);
    let text = write(
        dir.path(),
        "pattern.text.csv",
        "comment_id,text\nc1,a b c\nc2,b c d\nc3,a b c\n",
    );
    let report = json(&signdim(&["analyze", &votes, "--text", &text]));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["dimension"]["r_estimate"], 2);
    assert_eq!(report["n_comments"], 3);
    // Pairs: 0.5, 1.0, 0.5.
    assert!((report["lexical_similarity"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!(report["loo"]["accuracy"].is_f64());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let conflict = write(
        dir.path(),
        "bad.csv",
        "comment_id,voter_id,vote\nc7,v9,up\nc7,v9,down\n",
    );
    let out = signdim(&["analyze", &conflict]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("c7") && err.contains("v9"), "{err}");

    let empty = write(dir.path(), "empty.csv", "");
    assert_eq!(signdim(&["analyze", &empty]).status.code(), Some(4));

    let header_only = write(dir.path(), "header.csv", "comment_id,voter_id,vote\n");
    assert_eq!(signdim(&["dim", &header_only]).status.code(), Some(4));

    let missing = dir.path().join("nope.csv");
    assert_eq!(
        signdim(&["dim", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );

    let garbled = write(dir.path(), "garbled.csv", "who,what\nx,y\n");
    assert_eq!(signdim(&["bound", &garbled]).status.code(), Some(3));

    let pattern = write(dir.path(), "pattern.csv", SECOND_PATTERN);
    assert_eq!(
        signdim(&["dim", &pattern, "--min-comments", "10"])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn reads_standard_input() {
    let out = signdim_stdin(&["dim", "-"], SECOND_PATTERN);
    assert_eq!(json(&out)["r_estimate"], 2);
    let ingest = json(&signdim_stdin(&["ingest", "-"], SECOND_PATTERN));
    assert_eq!(ingest["matrix"]["n_comments"], 3);
    assert_eq!(ingest["stats"]["n_unique_patterns"], 2);
    // A matrix document is accepted as input as well.
    let doc = serde_json::to_string(&ingest["matrix"]).unwrap();
    assert_eq!(json(&signdim_stdin(&["bound", "-"], &doc))["r_hat"], 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.toml",
        "seed = 4\n\n[synthetic]\nn_comments = 6\nn_voters = 7\n",
    );
    let a = json(&signdim(&["simulate", "--config", &cfg]));
    assert_eq!(a["truth"]["seed"], 4);
    assert_eq!(a["matrix"]["n_comments"], 6);
    let b = json(&signdim(&[
        "simulate",
        "--config",
        &cfg,
        "--seed",
        "5",
        "--n-comments",
        "9",
    ]));
    assert_eq!(b["truth"]["seed"], 5);
    assert_eq!(b["matrix"]["n_comments"], 9);
    assert_eq!(b["matrix"]["n_voters"], 7);

    let bad = write(dir.path(), "bad.toml", "unknown_key = 1\n");
    assert_eq!(
        signdim(&["simulate", "--config", &bad]).status.code(),
        Some(3)
    );
    let cfg_json = write(
        dir.path(),
        "cfg.json",
        r#"{"seed": 4, "synthetic": {"n_comments": 6, "n_voters": 7}}"#,
    );
    assert_eq!(json(&signdim(&["simulate", "--config", &cfg_json])), a);
}

#[test]
fn embed_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let votes = write(dir.path(), "pattern.csv", SECOND_PATTERN);
    let model = dir.path().join("emb.json");
    let out = signdim(&[
        "embed",
        &votes,
        "--r",
        "2",
        "--output",
        model.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(doc["r"], 2);
    assert_eq!(doc["C"].as_array().unwrap().len(), 3);

    let down = json(&signdim(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--comment",
        "c2",
        "--voter",
        "v2",
    ]));
    assert_eq!(down["direction"], "down");
    assert!(down["p_up"].as_f64().unwrap() < 0.5);
    let up = json(&signdim(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--comment",
        "0",
        "--voter",
        "v1",
    ]));
    assert_eq!(up["direction"], "up");
    let missing = signdim(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--comment",
        "c9",
        "--voter",
        "v1",
    ]);
    assert_eq!(missing.status.code(), Some(4));
}

#[test]
fn loo_models_and_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let votes = write(dir.path(), "pattern.csv", SECOND_PATTERN);
    let majority = json(&signdim(&["loo", &votes, "--baseline", "majority"]));
    assert_eq!(majority["n_evaluated"], 9);
    let dvm = json(&signdim(&["loo", &votes, "--model", "dvm"]));
    assert_eq!(
        dvm["n_evaluated"].as_u64().unwrap() + dvm["skipped"].as_u64().unwrap(),
        9
    );
    assert_eq!(
        signdim(&["loo", &votes, "--baseline", "svd"]).status.code(),
        Some(4)
    );
}

#[test]
fn smt_round_trip_through_solver() {
    let probe = Command::new("z3").arg("-version").output();
    if !probe.is_ok_and(|o| o.status.success()) {
        eprintln!("z3 not found, skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let votes = write(dir.path(), "pattern.csv", SECOND_PATTERN);
    for (r, status) in [(1, "infeasible_certified"), (2, "feasible")] {
        let smt = signdim(&["export-smt", &votes, "--r", &r.to_string()]);
        assert!(smt.status.success());
        let mut z3 = Command::new("z3")
            .args(["-in", "-smt2"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        z3.stdin.take().unwrap().write_all(&smt.stdout).unwrap();
        let answer = z3.wait_with_output().unwrap();
        let model = write(
            dir.path(),
            "model.txt",
            &String::from_utf8_lossy(&answer.stdout),
        );
        let outcome = json(&signdim(&[
            "feas",
            &votes,
            "--r",
            &r.to_string(),
            "--model",
            &model,
        ]));
        assert_eq!(outcome["status"], status);
        assert_eq!(outcome["method"], "external_solver");
    }
    let certified = json(&signdim(&["dim", &votes, "--solver", "z3 -in -smt2"]));
    assert_eq!(certified["exact"], true);
}

#[test]
fn simulate_writes_votes_and_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("votes.csv");
    let out = json(&signdim(&[
        "simulate",
        "--seed",
        "2",
        "--r-true",
        "1",
        "--observe-prob",
        "1",
        "--votes-csv",
        csv.to_str().unwrap(),
    ]));
    assert_eq!(out["truth"]["r_true"], 1);
    let dim = json(&signdim(&["dim", csv.to_str().unwrap()]));
    assert_eq!(dim["r_estimate"], 1);
    assert_eq!(dim["exact"], true);

    let corpus = dir.path().join("corpus");
    let lines = signdim(&[
        "simulate",
        "--seed",
        "1",
        "--corpus",
        corpus.to_str().unwrap(),
        "--count",
        "3",
    ]);
    assert!(lines.status.success());
    assert_eq!(String::from_utf8_lossy(&lines.stdout).lines().count(), 3);
    assert!(corpus.join("discussion_02.text.csv").exists());
    let batch = signdim(&["analyze", "--batch", corpus.to_str().unwrap(), "--no-loo"]);
    assert!(batch.status.success());
    let reports: Vec<Value> = String::from_utf8_lossy(&batch.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(reports.len(), 3);
    assert!(reports
        .iter()
        .all(|r| r["loo"].is_null() && r["lexical_similarity"].is_f64()));
}
