//! File-backed annotation store: an append-only JSONL log of
//! [`AnnotationRecord`]s replayed into an [`AnnotationLog`] on open.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use qaleak_core::{Ack, AnnotationLog, AnnotationRecord};

use crate::error::{Error, Result};

pub struct AnnotationStore {
    path: PathBuf,
    file: File,
    log: AnnotationLog,
}

impl AnnotationStore {
    /// Opens (creating if needed) the log at `path` and replays it into `log`.
    pub fn open(path: &Path, mut log: AnnotationLog) -> Result<Self> {
        if path.exists() {
            replay(path, &mut log)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(Error::io(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
            log,
        })
    }

    pub fn log(&self) -> &AnnotationLog {
        &self.log
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Validates, writes and syncs one record before applying it.
    pub fn append(&mut self, record: AnnotationRecord) -> Result<Ack> {
        self.log.validate(&record)?;
        let mut line = serde_json::to_string(&record).map_err(|e| Error::Invalid(e.to_string()))?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|()| self.file.sync_data())
            .map_err(Error::io(&self.path))?;
        Ok(self.log.record(record)?)
    }
}

/// Applies every record of the file at `path` to `log`, in file order.
pub fn replay(path: &Path, log: &mut AnnotationLog) -> Result<()> {
    let file = File::open(path).map_err(Error::io(path))?;
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AnnotationRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, index + 1, e))?;
        log.record(record)
            .map_err(|e| Error::parse(path, index + 1, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use qaleak_core::{AnnotationSample, Candidate, CandidateSet, Label};
    use std::collections::BTreeMap;

    fn log() -> AnnotationLog {
        let sample = AnnotationSample {
            dataset: "toy".into(),
            seed: 1,
            algorithm: "x".into(),
            test_ids: vec!["q0".into(), "q1".into()],
        };
        let mut candidates = BTreeMap::new();
        for id in ["q0", "q1"] {
            candidates.insert(
                id.to_string(),
                CandidateSet {
                    test_id: id.into(),
                    candidates: vec![Candidate { train_id: "t0".into(), score: 2 }],
                },
            );
        }
        AnnotationLog::new(sample, &candidates)
    }

    fn record(annotator: &str, label: Label, secs: i64) -> AnnotationRecord {
        AnnotationRecord {
            test_id: "q0".into(),
            annotator: annotator.into(),
            label,
            matched_train_ids: if label == Label::Overlap { vec!["t0".into()] } else { vec![] },
            auto: false,
            timestamp: Utc.timestamp_opt(secs, 0).unwrap(),
            metadata: BTreeMap::new(),
        }
    }

    #[test]
    fn persists_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annotations.jsonl");
        {
            let mut store = AnnotationStore::open(&path, log()).unwrap();
            store.append(record("A", Label::Overlap, 1)).unwrap();
            store.append(record("A", Label::NoOverlap, 2)).unwrap();
            store.append(record("B", Label::Overlap, 3)).unwrap();
            assert!(store.append(record("", Label::Overlap, 3)).is_err());
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);

        let store = AnnotationStore::open(&path, log()).unwrap();
        assert_eq!(store.log().history().len(), 3);
        assert_eq!(store.log().labels_of("A")["q0"], Label::NoOverlap);
        assert_eq!(store.log().effective_label("q0"), Some(Label::Overlap));
    }

    #[test]
    fn corrupt_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annotations.jsonl");
        std::fs::write(&path, "not json\n").unwrap();
        assert!(matches!(AnnotationStore::open(&path, log()), Err(Error::Parse { line: 1, .. })));
    }
}
