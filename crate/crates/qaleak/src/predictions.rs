//! Prediction files: JSONL `{test_id, text}` or plain text aligned with the
//! test split, one answer per line.

use std::path::Path;

use qaleak_core::{DatasetSplit, NnPrediction, Prediction};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_jsonl, write_jsonl};

pub fn load_predictions(path: &Path, plain: bool, test: &DatasetSplit) -> Result<Vec<Prediction>> {
    if !plain {
        return read_jsonl(path);
    }
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() > test.len() {
        return Err(Error::parse(
            path,
            test.len() + 1,
            format!("{} answers for a test split of {} items", lines.len(), test.len()),
        ));
    }
    Ok(lines
        .iter()
        .zip(test.iter())
        .map(|(line, item)| Prediction {
            test_id: item.id.clone(),
            text: line.to_string(),
        })
        .collect())
}

/// Nearest-neighbor output line: the prediction format plus match details.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnRecord {
    pub test_id: String,
    pub text: String,
    pub matched_train_id: String,
    pub score: f64,
}

impl From<&NnPrediction> for NnRecord {
    fn from(p: &NnPrediction) -> Self {
        Self {
            test_id: p.test_id.clone(),
            text: p.answer.clone(),
            matched_train_id: p.matched_train_id.clone(),
            score: p.score,
        }
    }
}

pub fn write_nn_predictions(path: &Path, predictions: &[NnPrediction]) -> Result<()> {
    let records: Vec<NnRecord> = predictions.iter().map(NnRecord::from).collect();
    write_jsonl(path, &records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qaleak_core::{QaPair, SplitName};

    fn test_split() -> DatasetSplit {
        let items = (0..3).map(|i| QaPair::new(format!("q{i}"), "q", vec!["a".into()])).collect();
        DatasetSplit::new(SplitName::Test, items).unwrap()
    }

    #[test]
    fn plain_file_aligns_with_test_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.txt");
        std::fs::write(&path, "first\n\n").unwrap();
        let preds = load_predictions(&path, true, &test_split()).unwrap();
        assert_eq!(preds.len(), 2);
        assert_eq!(preds[0].test_id, "q0");
        assert_eq!(preds[1].text, "");

        std::fs::write(&path, "1\n2\n3\n4\n").unwrap();
        assert!(load_predictions(&path, true, &test_split()).is_err());
    }

    #[test]
    fn nn_records_read_back_as_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nn.jsonl");
        let p = NnPrediction {
            test_id: "q1".into(),
            matched_train_id: "t4".into(),
            score: 0.5,
            answer: "Paris".into(),
        };
        write_nn_predictions(&path, &[p]).unwrap();
        let preds = load_predictions(&path, false, &test_split()).unwrap();
        assert_eq!(preds, vec![Prediction { test_id: "q1".into(), text: "Paris".into() }]);
    }
}
