//! Dataset files and line-delimited JSON helpers.
//!
//! A dataset file holds one JSON object per line with fields `id` (optional),
//! `question` and `answers` (`answer` is accepted as an alias). The
//! tab-separated form used by public open-domain QA releases, `question<TAB>
//! answer-list`, is also read; the answer list may be a JSON array or a Python
//! list literal.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use qaleak_core::{dataset, DatasetError, DatasetSplit, QaPair, SplitName};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Jsonl,
    Tsv,
}

impl DatasetFormat {
    /// `.tsv`, `.csv` and `.txt` files are tab-separated; everything else is JSONL.
    pub fn detect(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv" | "csv" | "txt") => DatasetFormat::Tsv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" | "json" => Ok(DatasetFormat::Jsonl),
            "tsv" => Ok(DatasetFormat::Tsv),
            other => Err(format!("unknown dataset format {other:?} (expected jsonl or tsv)")),
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    #[serde(default)]
    id: Option<serde_json::Value>,
    question: String,
    #[serde(alias = "answer")]
    answers: Vec<String>,
}

fn id_string(value: serde_json::Value) -> Option<String> {
    match value {
        serde_json::Value::Null => None,
        serde_json::Value::String(s) => Some(s),
        other => Some(other.to_string()),
    }
}

/// Loads a split. Records without an id get their zero-based ordinal.
pub fn load_dataset(path: &Path, format: DatasetFormat, name: SplitName) -> Result<DatasetSplit> {
    let file = File::open(path).map_err(Error::io(path))?;
    let mut items = Vec::new();
    let mut lines = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(Error::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let ordinal = items.len();
        let (id, question, answers) = match format {
            DatasetFormat::Jsonl => {
                let raw: RawRecord =
                    serde_json::from_str(&line).map_err(|e| Error::parse(path, line_no, e))?;
                (raw.id.and_then(id_string), raw.question, raw.answers)
            }
            DatasetFormat::Tsv => {
                let (question, answers) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::parse(path, line_no, "expected question<TAB>answers"))?;
                let answers =
                    parse_answer_list(answers).map_err(|m| Error::parse(path, line_no, m))?;
                (None, question.to_string(), answers)
            }
        };
        let item = QaPair::new(id.unwrap_or_else(|| ordinal.to_string()), question, answers);
        dataset::validate(&item).map_err(|source| Error::Dataset {
            path: path.into(),
            line: line_no,
            source,
        })?;
        items.push(item);
        lines.push(line_no);
    }
    DatasetSplit::new(name, items).map_err(|source| {
        let line = match &source {
            DatasetError::DuplicateId { position, .. } => lines[*position],
            _ => 0,
        };
        Error::Dataset {
            path: path.into(),
            line,
            source,
        }
    })
}

/// Parses a JSON array, a Python list literal of strings, or a bare string.
pub fn parse_answer_list(text: &str) -> Result<Vec<String>, String> {
    let text = text.trim();
    if text.starts_with('[') {
        if let Ok(list) = serde_json::from_str::<Vec<String>>(text) {
            return Ok(list);
        }
        return parse_python_list(text);
    }
    Ok(vec![text.to_string()])
}

fn parse_python_list(text: &str) -> Result<Vec<String>, String> {
    let mut chars = text.chars().peekable();
    let mut out = Vec::new();
    if chars.next() != Some('[') {
        return Err("answer list must start with '['".into());
    }
    loop {
        while chars.next_if(|c| c.is_whitespace() || *c == ',').is_some() {}
        match chars.next() {
            Some(']') => break,
            Some(quote @ ('\'' | '"')) => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('\\') => match chars.next() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(c) => s.push(c),
                            None => return Err("unterminated escape".into()),
                        },
                        Some(c) if c == quote => break,
                        Some(c) => s.push(c),
                        None => return Err("unterminated string in answer list".into()),
                    }
                }
                out.push(s);
            }
            Some(c) => return Err(format!("unexpected character {c:?} in answer list")),
            None => return Err("unterminated answer list".into()),
        }
    }
    Ok(out)
}

/// Reads a JSONL file into records, reporting the failing line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(Error::io(path))?;
    let mut out = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(path, index + 1, e))?);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, records: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut writer = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut writer, record).map_err(|e| Error::Invalid(e.to_string()))?;
        writer.write_all(b"\n").map_err(Error::io(path))?;
    }
    writer.flush().map_err(Error::io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(Error::io(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e))
}
