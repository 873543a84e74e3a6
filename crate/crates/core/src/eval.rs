//! Exact-match scoring and three-way stratified evaluation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{AnnotationSample, Label};
use crate::dataset::DatasetSplit;
use crate::overlap::AnswerOverlapResult;
use crate::text::normalize_answer;

/// Whether the normalized prediction equals some normalized reference.
pub fn exact_match<S: AsRef<str>>(prediction: &str, references: &[S]) -> bool {
    let prediction = normalize_answer(prediction);
    references
        .iter()
        .any(|r| normalize_answer(r.as_ref()) == prediction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    QuestionOverlap,
    AnswerOverlapOnly,
    NoOverlap,
}

impl Stratum {
    pub const ALL: [Stratum; 3] = [
        Stratum::QuestionOverlap,
        Stratum::AnswerOverlapOnly,
        Stratum::NoOverlap,
    ];

    pub fn title(self) -> &'static str {
        match self {
            Stratum::QuestionOverlap => "Question Overlap",
            Stratum::AnswerOverlapOnly => "Answer Overlap Only",
            Stratum::NoOverlap => "No Overlap",
        }
    }

    /// Question overlap takes precedence over answer overlap.
    pub fn classify(question_overlap: Label, answer_overlap: bool) -> Self {
        match (question_overlap, answer_overlap) {
            (Label::Overlap, _) => Stratum::QuestionOverlap,
            (Label::NoOverlap, true) => Stratum::AnswerOverlapOnly,
            (Label::NoOverlap, false) => Stratum::NoOverlap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumAssignment {
    pub test_id: String,
    pub stratum: Stratum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub test_id: String,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{} sampled ids lack a question-overlap label (first: {:?})", .0.len(), .0.first())]
    MissingLabels(Vec<String>),
    #[error("{} sampled ids lack an answer-overlap result (first: {:?})", .0.len(), .0.first())]
    MissingOverlap(Vec<String>),
    #[error("duplicate prediction for test id {0:?}")]
    DuplicatePrediction(String),
    #[error("id {0:?} is not in the test split")]
    UnknownTestId(String),
}

/// Assigns every sampled id to a stratum, in sample order.
pub fn stratify(
    sample: &AnnotationSample,
    effective_labels: &BTreeMap<String, Label>,
    answer_overlap: &[AnswerOverlapResult],
) -> Result<Vec<StratumAssignment>, EvalError> {
    let overlap: HashMap<&str, bool> = answer_overlap
        .iter()
        .map(|r| (r.test_id.as_str(), r.overlapping))
        .collect();

    let missing_labels: Vec<String> = sample
        .test_ids
        .iter()
        .filter(|id| !effective_labels.contains_key(id.as_str()))
        .cloned()
        .collect();
    if !missing_labels.is_empty() {
        return Err(EvalError::MissingLabels(missing_labels));
    }
    let missing_overlap: Vec<String> = sample
        .test_ids
        .iter()
        .filter(|id| !overlap.contains_key(id.as_str()))
        .cloned()
        .collect();
    if !missing_overlap.is_empty() {
        return Err(EvalError::MissingOverlap(missing_overlap));
    }

    Ok(sample
        .test_ids
        .iter()
        .map(|id| StratumAssignment {
            test_id: id.clone(),
            stratum: Stratum::classify(effective_labels[id.as_str()], overlap[id.as_str()]),
        })
        .collect())
}

/// Item count, correct count and exact-match percentage of one subset.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BucketScore {
    pub count: usize,
    pub correct: usize,
    /// Percentage in `[0, 100]`; `None` for an empty subset.
    pub em: Option<f64>,
}

impl BucketScore {
    fn add(&mut self, correct: bool) {
        self.count += 1;
        self.correct += usize::from(correct);
    }

    fn finish(mut self) -> Self {
        self.em = (self.count > 0).then(|| 100.0 * self.correct as f64 / self.count as f64);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedReport {
    pub dataset: String,
    pub model: String,
    /// Over the full test split.
    pub total: BucketScore,
    /// Over the annotated sample.
    pub sample: BucketScore,
    pub question_overlap: BucketScore,
    pub answer_overlap_only: BucketScore,
    pub no_overlap: BucketScore,
    /// Test ids without a prediction; scored as incorrect.
    pub missing_predictions: Vec<String>,
}

impl StratifiedReport {
    pub fn bucket(&self, stratum: Stratum) -> &BucketScore {
        match stratum {
            Stratum::QuestionOverlap => &self.question_overlap,
            Stratum::AnswerOverlapOnly => &self.answer_overlap_only,
            Stratum::NoOverlap => &self.no_overlap,
        }
    }

    fn bucket_mut(&mut self, stratum: Stratum) -> &mut BucketScore {
        match stratum {
            Stratum::QuestionOverlap => &mut self.question_overlap,
            Stratum::AnswerOverlapOnly => &mut self.answer_overlap_only,
            Stratum::NoOverlap => &mut self.no_overlap,
        }
    }
}

/// Scores `predictions` over the whole test split and per stratum.
///
/// Test items without a prediction count as incorrect and are listed in
/// [`StratifiedReport::missing_predictions`].
pub fn evaluate(
    dataset: &str,
    model: &str,
    predictions: &[Prediction],
    test: &DatasetSplit,
    strata: &[StratumAssignment],
) -> Result<StratifiedReport, EvalError> {
    let mut by_id: HashMap<&str, &str> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if test.get(&p.test_id).is_none() {
            return Err(EvalError::UnknownTestId(p.test_id.clone()));
        }
        if by_id.insert(p.test_id.as_str(), p.text.as_str()).is_some() {
            return Err(EvalError::DuplicatePrediction(p.test_id.clone()));
        }
    }

    let mut correct: HashMap<&str, bool> = HashMap::with_capacity(test.len());
    let mut total = BucketScore::default();
    let mut missing = Vec::new();
    for item in test {
        let hit = match by_id.get(item.id.as_str()) {
            Some(text) => exact_match(text, &item.answers),
            None => {
                missing.push(item.id.clone());
                false
            }
        };
        total.add(hit);
        correct.insert(item.id.as_str(), hit);
    }

    let mut report = StratifiedReport {
        dataset: String::from(dataset),
        model: String::from(model),
        total: total.finish(),
        sample: BucketScore::default(),
        question_overlap: BucketScore::default(),
        answer_overlap_only: BucketScore::default(),
        no_overlap: BucketScore::default(),
        missing_predictions: missing,
    };
    for assignment in strata {
        let hit = *correct
            .get(assignment.test_id.as_str())
            .ok_or_else(|| EvalError::UnknownTestId(assignment.test_id.clone()))?;
        report.sample.add(hit);
        report.bucket_mut(assignment.stratum).add(hit);
    }
    report.sample = report.sample.finish();
    for stratum in Stratum::ALL {
        let bucket = report.bucket_mut(stratum);
        *bucket = bucket.finish();
    }
    Ok(report)
}
