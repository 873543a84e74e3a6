#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use qaleak::commands::RunConfig;
use serde_json::json;

pub type Row<'a> = (&'a str, &'a str, &'a [&'a str]);

pub fn write_split(path: &Path, rows: &[Row<'_>]) {
    let mut text = String::new();
    for (id, question, answers) in rows {
        text.push_str(&json!({"id": id, "question": question, "answers": answers}).to_string());
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

pub const TRAIN: &[Row<'static>] = &[
    ("t0", "who wrote hamlet", &["Shakespeare"]),
    ("t1", "author of the play hamlet", &["William Shakespeare"]),
    ("t2", "capital of france", &["Paris"]),
    ("t3", "largest planet in the solar system", &["Jupiter"]),
];

pub const TEST: &[Row<'static>] = &[
    ("q0", "which author wrote the play hamlet", &["shakespeare"]),
    ("q1", "what is the capital city of france", &["Paris"]),
    ("q2", "what is the biggest planet", &["jupiter"]),
    ("q3", "who painted the mona lisa", &["Leonardo da Vinci"]),
];

/// Writes train/test fixtures into `dir` and returns a config reading them.
pub fn fixture_config(dir: &Path, train: &[Row<'_>], test: &[Row<'_>]) -> RunConfig {
    let train_path = dir.join("train.jsonl");
    let test_path = dir.join("test.jsonl");
    write_split(&train_path, train);
    write_split(&test_path, test);
    let mut config = RunConfig::new(dir.join("out"));
    config.train = Some(train_path);
    config.test = Some(test_path);
    config
}

pub fn qaleak_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_qaleak"))
}
