use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const OBLIVIOUS: &str = r#"{"n":2,"alphabets":[2,2],"info":[{"gen":"constant"},{"gen":"constant"}]}"#;
const RECALL: &str = r#"{"n":2,"alphabets":[2,2],"info":[{"gen":"constant"},{"gen":"perfect-recall"}]}"#;
const ANTI: &str = r#"{"alphabets":[2,2],"probs":[0,0.5,0.5,0]}"#;

struct Run {
    code: i32,
    stdout: String,
}

fn qcoord(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_qcoord"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf8 output"),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(run: &Run) -> Value {
    serde_json::from_str(run.stdout.trim()).unwrap_or_else(|e| panic!("not json ({e}): {}", run.stdout))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_reports_witness_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let proc = write(dir.path(), "p.json", OBLIVIOUS);
    let target = write(dir.path(), "t.json", ANTI);
    let run = qcoord(&[
        "--format",
        "machine",
        "check",
        "--process",
        s(&proc),
        "--target",
        s(&target),
    ]);
    assert_eq!(run.code, 1);
    let v = json(&run);
    assert_eq!(v["feasible"], false);
    let w = &v["witness"];
    assert_eq!(w["k"], 2);
    assert_eq!(w["h"], serde_json::json!([0]));
    assert_eq!(w["h2"], serde_json::json!([1]));
    assert!((w["gap"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn check_under_perfect_recall_is_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let proc = write(dir.path(), "p.json", RECALL);
    let target = write(dir.path(), "t.json", ANTI);
    let run = qcoord(&[
        "--format",
        "machine",
        "check",
        "--process",
        s(&proc),
        "--target",
        s(&target),
    ]);
    assert_eq!(run.code, 0);
    let v = json(&run);
    assert_eq!(v["feasible"], true);
    assert_eq!(v["certificate"]["tables"][1][0], serde_json::json!([0.0, 1.0]));
    assert_eq!(v["certificate"]["tables"][1][1], serde_json::json!([1.0, 0.0]));
}

#[test]
fn constructed_example_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("illex2.json");
    let run = qcoord(&["construct", "example", "illex2", "--out", s(&bundle)]);
    assert_eq!(run.code, 0, "{}", run.stdout);
    let run = qcoord(&["--format", "machine", "verify", "--bundle", s(&bundle)]);
    assert_eq!(run.code, 0, "{}", run.stdout);
    let v = json(&run);
    assert_eq!(v["pass"], true);
    assert!(v["max_abs_error"].as_f64().unwrap() < 1e-12);
}

#[test]
fn verify_against_wrong_target_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("b.json");
    assert_eq!(qcoord(&["construct", "example", "illex2", "--out", s(&bundle)]).code, 0);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&bundle).unwrap()).unwrap();
    let proc = write(dir.path(), "p.json", &doc["process"].to_string());
    let model = write(dir.path(), "m.json", &doc["model"].to_string());
    let target = write(
        dir.path(),
        "t.json",
        r#"{"alphabets":[2,2],"probs":[0.25,0.25,0.25,0.25]}"#,
    );
    let run = qcoord(&[
        "--format",
        "machine",
        "verify",
        "--process",
        s(&proc),
        "--model",
        s(&model),
        "--target",
        s(&target),
    ]);
    assert_eq!(run.code, 1);
    let v = json(&run);
    assert_eq!(v["pass"], false);
    assert!((v["max_abs_error"].as_f64().unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn povm_summing_to_twice_identity_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let proc = write(
        dir.path(),
        "p.json",
        r#"{"n":1,"alphabets":[2],"info":[{"gen":"constant"}]}"#,
    );
    let model = write(
        dir.path(),
        "m.json",
        r#"{"dims":[2],
            "state":[[[1,0],[0,0]],[[0,0],[0,0]]],
            "povms":[[[ [[[1,0],[0,0]],[[0,0],[1,0]]], [[[1,0],[0,0]],[[0,0],[1,0]]] ]]]}"#,
    );
    let run = qcoord(&["eval", "quantum", "--process", s(&proc), "--model", s(&model)]);
    assert_eq!(run.code, 2);
    assert_eq!(run.stdout.lines().count(), 1);
    let v = json(&run);
    assert!(
        v["error"]["message"].as_str().unwrap().contains("identity"),
        "{}",
        run.stdout
    );
}

#[test]
fn missing_prefix_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let proc = write(
        dir.path(),
        "p.json",
        r#"{"n":2,"alphabets":[2,2],"info":[{"gen":"constant"},{"map":{"0":0},"labels":1}]}"#,
    );
    let target = write(dir.path(), "t.json", ANTI);
    let run = qcoord(&["check", "--process", s(&proc), "--target", s(&target)]);
    assert_eq!(run.code, 2);
    let msg = json(&run)["error"]["message"].as_str().unwrap().to_string();
    assert!(msg.contains("stage 2") && msg.contains("(1)"), "{msg}");
}

#[test]
fn bad_arguments_produce_error_record() {
    let run = qcoord(&["fit", "--metric", "hellinger"]);
    assert_eq!(run.code, 2);
    assert_eq!(json(&run)["error"]["kind"], "usage");
    let run = qcoord(&["construct", "example", "nope"]);
    assert_eq!(run.code, 2);
    assert!(json(&run)["error"]["message"].as_str().unwrap().contains("illex2"));
    assert_eq!(qcoord(&["--help"]).code, 0);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let proc = write(dir.path(), "p.json", OBLIVIOUS);
    let target = write(dir.path(), "t.json", ANTI);
    for metric in ["tv", "l2", "kl"] {
        let args = [
            "--format",
            "machine",
            "fit",
            "--process",
            s(&proc),
            "--target",
            s(&target),
            "--metric",
            metric,
            "--seed",
            "7",
        ];
        let a = qcoord(&args);
        let b = qcoord(&args);
        assert_eq!(a.code, 0);
        assert_eq!(a.stdout, b.stdout);
    }
    for name in ["illex2", "diagonal-flip", "three-stage"] {
        assert_eq!(
            qcoord(&["construct", "example", name]).stdout,
            qcoord(&["construct", "example", name]).stdout
        );
    }
}

#[test]
fn fit_on_anti_correlated_target_matches_grid_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let proc = write(dir.path(), "p.json", OBLIVIOUS);
    let target = write(dir.path(), "t.json", ANTI);
    let v = json(&qcoord(&[
        "--format",
        "machine",
        "fit",
        "--process",
        s(&proc),
        "--target",
        s(&target),
    ]));
    assert_eq!(v["metric"], "tv");
    // Brute force over product distributions (a, 1-a) x (b, 1-b).
    let mut best = f64::INFINITY;
    for i in 0..=1000 {
        for j in 0..=1000 {
            let (a, b) = (i as f64 / 1000.0, j as f64 / 1000.0);
            let q = [a * b, a * (1.0 - b), (1.0 - a) * b, (1.0 - a) * (1.0 - b)];
            let tv = 0.5 * (q[0] + (q[1] - 0.5).abs() + (q[2] - 0.5).abs() + q[3]);
            best = best.min(tv);
        }
    }
    assert!((v["distance"].as_f64().unwrap() - best).abs() < 2e-3);
}

#[test]
fn emitted_documents_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["illex2", "diagonal-flip", "three-stage"] {
        let first = qcoord(&["--format", "machine", "construct", "example", name]);
        let doc: Value = serde_json::from_str(first.stdout.trim()).unwrap();
        let proc = write(dir.path(), "p.json", &doc["process"].to_string());
        let model = write(dir.path(), "m.json", &doc["model"].to_string());
        let evald = json(&qcoord(&[
            "--format",
            "machine",
            "eval",
            "quantum",
            "--process",
            s(&proc),
            "--model",
            s(&model),
        ]));
        let probs: Vec<f64> = serde_json::from_value(evald["probs"].clone()).unwrap();
        let target: Vec<f64> = serde_json::from_value(doc["target"]["probs"].clone()).unwrap();
        for (p, t) in probs.iter().zip(&target) {
            assert!((p - t).abs() < 1e-12, "{name}");
        }
        // The re-serialized bundle must match what was emitted.
        let bundle = write(dir.path(), "b.json", first.stdout.trim());
        let parsed = qcoord_cli::format::parse_bundle_file(&std::fs::read_to_string(&bundle).unwrap()).unwrap();
        let again = qcoord_cli::format::QuantumModelDoc::from_model(&parsed.model);
        assert_eq!(serde_json::to_value(&again).unwrap(), doc["model"], "{name}");
    }
}

#[test]
fn discord_and_witness_commands() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("b.json");
    assert_eq!(
        qcoord(&["construct", "example", "diagonal-flip", "--out", s(&bundle)]).code,
        0
    );
    let v = json(&qcoord(&[
        "--format",
        "machine",
        "discord",
        "--model",
        s(&bundle),
        "--grid",
        "64",
    ]));
    assert!(v["discord"].as_f64().unwrap().abs() < 1e-6);

    let states = write(
        dir.path(),
        "s.json",
        r#"{"states":[ [[[1,0],[0,0]],[[0,0],[0,0]]], [[[0.5,0],[0.5,0]],[[0.5,0],[0.5,0]]] ]}"#,
    );
    let v = json(&qcoord(&["--format", "machine", "witness-cc", "--states", s(&states)]));
    assert!((v["witness"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert_eq!(v["commuting"], false);
}
