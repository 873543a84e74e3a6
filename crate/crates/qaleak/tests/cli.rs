mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{qaleak_bin, write_split, Row};
use qaleak::embeddings::write_embeddings;
use qaleak_core::EmbeddingTable;
use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(qaleak_bin())
        .current_dir(dir)
        .env_remove("QA_LEAKAGE_OUT")
        .args(args)
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ten_item_fixture(dir: &Path) {
    let train: Vec<Row> = vec![
        ("t0", "q", &["Paris"]),
        ("t1", "q", &["the Beatles"]),
        ("t2", "q", &["1830s"]),
        ("t3", "q", &["Jupiter"]),
        ("t4", "q", &["red"]),
        ("t5", "q", &["Harry S. Truman"]),
    ];
    let test: Vec<Row> = vec![
        ("x0", "q", &["paris"]),
        ("x1", "q", &["Beatles!"]),
        ("x2", "q", &["the 1830s"]),
        ("x3", "q", &["JUPITER"]),
        ("x4", "q", &["blue", "red"]),
        ("x5", "q", &["harry s truman"]),
        ("x6", "q", &["Saturn"]),
        ("x7", "q", &["green"]),
        ("x8", "q", &["1840s"]),
        ("x9", "q", &["Truman Capote"]),
    ];
    write_split(&dir.join("train.jsonl"), &train);
    write_split(&dir.join("test.jsonl"), &test);
}

#[test]
fn overlap_summary_reports_one_decimal_percent() {
    let dir = tempfile::tempdir().unwrap();
    ten_item_fixture(dir.path());
    let out = run(
        dir.path(),
        &["overlap", "--train", "train.jsonl", "--test", "test.jsonl", "--out", "out"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("60.0%"));

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/overlap_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["answer_overlap"], "60.0");
    assert_eq!(summary["overlapping"], 6);
    assert_eq!(summary["test_items"], 10);
    assert_eq!(summary["dataset"], "test");

    let lines = fs::read_to_string(dir.path().join("out/answer_overlap.jsonl")).unwrap();
    let flags: Vec<bool> = lines
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["overlapping"].as_bool().unwrap())
        .collect();
    assert_eq!(flags, [true, true, true, true, true, true, false, false, false, false]);
}

#[test]
fn output_directory_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    ten_item_fixture(dir.path());
    let out = Command::new(qaleak_bin())
        .current_dir(dir.path())
        .env("QA_LEAKAGE_OUT", "from_env")
        .args(["overlap", "--train", "train.jsonl", "--test", "test.jsonl"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("from_env/overlap_summary.json").exists());
}

#[test]
fn empty_test_split_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    ten_item_fixture(dir.path());
    fs::write(dir.path().join("empty.jsonl"), "\n").unwrap();
    let out = run(
        dir.path(),
        &["overlap", "--train", "train.jsonl", "--test", "empty.jsonl", "--out", "out"],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("empty"), "{}", stderr(&out));
}

#[test]
fn malformed_input_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    ten_item_fixture(dir.path());
    let mut text = fs::read_to_string(dir.path().join("train.jsonl")).unwrap();
    text.push_str("{\"id\": \"t0\", \"question\": \"dup\", \"answers\": [\"x\"]}\n");
    fs::write(dir.path().join("train.jsonl"), text).unwrap();
    let out = run(
        dir.path(),
        &["overlap", "--train", "train.jsonl", "--test", "test.jsonl", "--out", "out"],
    );
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("train.jsonl") && err.contains('7') && err.contains("t0"), "{err}");
}

#[test]
fn tfidf_baseline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write_split(&dir.path().join("train.jsonl"), common::TRAIN);
    write_split(&dir.path().join("test.jsonl"), common::TEST);
    let args = |out: &'static str| {
        ["nn", "--mode", "tfidf", "--train", "train.jsonl", "--test", "test.jsonl", "--out", out]
    };
    assert!(run(dir.path(), &args("a")).status.success());
    assert!(run(dir.path(), &args("b")).status.success());
    let a = fs::read(dir.path().join("a/nn_tfidf.jsonl")).unwrap();
    let b = fs::read(dir.path().join("b/nn_tfidf.jsonl")).unwrap();
    assert_eq!(a, b);

    let rows: Vec<Value> = String::from_utf8(a)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1]["matched_train_id"], "t2");
    assert_eq!(rows[1]["text"], "Paris");
    assert_eq!(rows[2]["matched_train_id"], "t3");
}

fn basis(ids: &[&str], dim: usize, order: &[usize]) -> EmbeddingTable {
    let mut values = vec![0.0f32; ids.len() * dim];
    for (row, &axis) in order.iter().enumerate() {
        values[row * dim + axis] = 1.0;
    }
    EmbeddingTable::new(ids.iter().map(|s| s.to_string()).collect(), dim, values).unwrap()
}

#[test]
fn dense_baseline_matches_basis_vectors() {
    let dir = tempfile::tempdir().unwrap();
    write_split(&dir.path().join("train.jsonl"), common::TRAIN);
    write_split(&dir.path().join("test.jsonl"), common::TEST);
    let p = dir.path();
    write_embeddings(&p.join("train.emb"), &p.join("train.emb.ids"), &basis(&["t0", "t1", "t2", "t3"], 4, &[0, 1, 2, 3])).unwrap();
    write_embeddings(&p.join("test.emb"), &p.join("test.emb.ids"), &basis(&["q0", "q1", "q2", "q3"], 4, &[3, 2, 1, 0])).unwrap();

    let out = run(
        p,
        &[
            "nn", "--mode", "dense", "--train", "train.jsonl", "--test", "test.jsonl", "--out", "out",
            "--embeddings-train", "train.emb", "--embeddings-test", "test.emb",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let matched: Vec<String> = fs::read_to_string(p.join("out/nn_dense.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["matched_train_id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(matched, ["t3", "t2", "t1", "t0"]);

    // A dimension mismatch is rejected.
    write_embeddings(&p.join("test.emb"), &p.join("test.emb.ids"), &basis(&["q0"], 3, &[0])).unwrap();
    let out = run(
        p,
        &[
            "nn", "--mode", "dense", "--train", "train.jsonl", "--test", "test.jsonl", "--out", "out",
            "--embeddings-train", "train.emb", "--embeddings-test", "test.emb",
        ],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("dimension"), "{}", stderr(&out));
}

/// Test answers never occur in train, so every sampled item is labeled automatically.
fn disjoint_fixture(dir: &Path) {
    write_split(&dir.join("train.jsonl"), &[("t0", "who wrote hamlet", &["Shakespeare"])]);
    write_split(
        &dir.join("test.jsonl"),
        &[("x0", "capital of peru", &["Lima"]), ("x1", "largest ocean", &["Pacific"])],
    );
}

#[test]
fn pipeline_rejects_predictions_for_unknown_ids() {
    let dir = tempfile::tempdir().unwrap();
    disjoint_fixture(dir.path());
    fs::write(
        dir.path().join("preds.jsonl"),
        "{\"test_id\": \"x0\", \"text\": \"lima\"}\n{\"test_id\": \"ghost\", \"text\": \"x\"}\n",
    )
    .unwrap();
    let out = run(
        dir.path(),
        &["pipeline", "--train", "train.jsonl", "--test", "test.jsonl", "--out", "out", "--predictions", "m=preds.jsonl"],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("ghost"), "{}", stderr(&out));
}

#[test]
fn pipeline_evaluates_plain_predictions_once_labeled() {
    let dir = tempfile::tempdir().unwrap();
    disjoint_fixture(dir.path());
    fs::write(dir.path().join("preds.txt"), "Lima\nAtlantic\n").unwrap();
    let out = run(
        dir.path(),
        &[
            "pipeline", "--train", "train.jsonl", "--test", "test.jsonl", "--out", "out",
            "--predictions", "plain=preds.txt", "--plain-predictions",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("plain"), "{stdout}");
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report_plain.json")).unwrap()).unwrap();
    assert_eq!(report["total"]["count"], 2);
    assert_eq!(report["total"]["em"], 50.0);
    assert_eq!(report["no_overlap"]["count"], 2);
    assert_eq!(report["question_overlap"]["em"], Value::Null);
}

#[test]
fn pipeline_with_predictions_lists_unannotated_items() {
    let dir = tempfile::tempdir().unwrap();
    ten_item_fixture(dir.path());
    fs::write(dir.path().join("preds.jsonl"), "{\"test_id\": \"x0\", \"text\": \"paris\"}\n").unwrap();
    let out = run(
        dir.path(),
        &["pipeline", "--train", "train.jsonl", "--test", "test.jsonl", "--out", "out", "--predictions", "m=preds.jsonl"],
    );
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("6 sampled items still need annotation"), "{err}");
    for id in ["x0", "x1", "x2", "x3", "x4", "x5"] {
        assert!(err.contains(id), "{err}");
    }

    // Without predictions the same state is a progress report, not an error.
    let out = run(dir.path(), &["pipeline", "--train", "train.jsonl", "--test", "test.jsonl", "--out", "out"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("6 items still need annotation"));
}

#[test]
fn bad_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    ten_item_fixture(dir.path());
    let out = run(dir.path(), &["overlap", "--test", "test.jsonl", "--out", "out"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--train"));
    let out = run(dir.path(), &["evaluate", "--train", "train.jsonl", "--test", "test.jsonl", "--predictions", "nopath"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("NAME=PATH"));
}
