//! Duplicate-question annotation: sampling, verdict bookkeeping and
//! inter-annotator agreement.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DatasetSplit;
use crate::overlap::CandidateSet;
use crate::sampling;

/// Annotator name used for records produced by [`auto_label_empty`].
pub const AUTO_ANNOTATOR: &str = "auto";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Overlap,
    NoOverlap,
}

/// One annotator's verdict on one test item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub test_id: String,
    pub annotator: String,
    pub label: Label,
    #[serde(default)]
    pub matched_train_ids: Vec<String>,
    #[serde(default)]
    pub auto: bool,
    pub timestamp: DateTime<Utc>,
    /// Free-form extras such as a difficulty tag.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("test id {0:?} is not part of the annotation sample")]
    UnknownTestId(String),
    #[error("train id {train_id:?} is not a candidate for test item {test_id:?}")]
    NotACandidate { test_id: String, train_id: String },
    #[error("malformed annotation: {0}")]
    Malformed(&'static str),
    #[error("no test ids shared by the two annotators")]
    NoCommonItems,
}

/// The random subset of test ids chosen for annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSample {
    pub dataset: String,
    pub seed: u64,
    /// Name of the sampling procedure, so the sample can be regenerated.
    pub algorithm: String,
    pub test_ids: Vec<String>,
}

impl AnnotationSample {
    pub fn len(&self) -> usize {
        self.test_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.test_ids.is_empty()
    }

    pub fn contains(&self, test_id: &str) -> bool {
        self.test_ids.iter().any(|id| id == test_id)
    }
}

/// Draws `min(n, |test|)` distinct test ids uniformly without replacement.
/// The same `(test, n, seed)` always yields the same ordered list.
pub fn sample_for_annotation(
    dataset: &str,
    test: &DatasetSplit,
    n: usize,
    seed: u64,
) -> AnnotationSample {
    let mut ids: Vec<&str> = test.iter().map(|item| item.id.as_str()).collect();
    let n = n.min(ids.len());
    sampling::shuffled_prefix(&mut ids, n, seed);
    AnnotationSample {
        dataset: String::from(dataset),
        seed,
        algorithm: String::from(sampling::ALGORITHM),
        test_ids: ids[..n].iter().map(|s| String::from(*s)).collect(),
    }
}

/// `no_overlap` records for every sampled id whose candidate set is empty.
///
/// Records carry the Unix epoch as timestamp so repeated runs produce
/// identical output. Sampled ids without an entry in `candidates` are skipped.
pub fn auto_label_empty(
    sample: &AnnotationSample,
    candidates: &BTreeMap<String, CandidateSet>,
) -> Vec<AnnotationRecord> {
    sample
        .test_ids
        .iter()
        .filter(|id| candidates.get(id.as_str()).is_some_and(CandidateSet::is_empty))
        .map(|id| AnnotationRecord {
            test_id: id.clone(),
            annotator: String::from(AUTO_ANNOTATOR),
            label: Label::NoOverlap,
            matched_train_ids: Vec::new(),
            auto: true,
            timestamp: DateTime::<Utc>::UNIX_EPOCH,
            metadata: BTreeMap::new(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub n_common: usize,
    pub agreement: f64,
    pub kappa: f64,
}

/// Observed agreement and Cohen's kappa over the ids both maps label.
pub fn cohens_kappa(
    labels_a: &BTreeMap<String, Label>,
    labels_b: &BTreeMap<String, Label>,
) -> Result<Agreement, AnnotationError> {
    let mut n = 0usize;
    let mut agree = 0usize;
    let mut a_overlap = 0usize;
    let mut b_overlap = 0usize;
    for (id, a) in labels_a {
        let Some(b) = labels_b.get(id) else { continue };
        n += 1;
        agree += usize::from(a == b);
        a_overlap += usize::from(*a == Label::Overlap);
        b_overlap += usize::from(*b == Label::Overlap);
    }
    if n == 0 {
        return Err(AnnotationError::NoCommonItems);
    }

    let total = n as f64;
    let p_o = agree as f64 / total;
    let (pa, pb) = (a_overlap as f64 / total, b_overlap as f64 / total);
    let p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
    let kappa = if p_e >= 1.0 {
        if p_o >= 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (p_o - p_e) / (1.0 - p_e)
    };
    Ok(Agreement {
        n_common: n,
        agreement: p_o,
        kappa,
    })
}

/// Returned by [`AnnotationLog::record`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub test_id: String,
    pub annotator: String,
    /// Position of the record in the append log.
    pub sequence: usize,
    /// Whether this record is now the annotator's effective verdict.
    pub effective: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Progress {
    pub total: usize,
    pub completed: usize,
    pub remaining: usize,
    pub per_annotator: BTreeMap<String, usize>,
}

/// In-memory annotation state over one sample: the append-only history plus
/// the latest verdict per `(test_id, annotator)`.
///
/// Replaying the same records in the same order always yields the same state.
#[derive(Debug, Clone)]
pub struct AnnotationLog {
    sample: AnnotationSample,
    candidates: BTreeMap<String, BTreeSet<String>>,
    history: Vec<AnnotationRecord>,
    latest: BTreeMap<String, BTreeMap<String, usize>>,
}

impl AnnotationLog {
    /// `candidates` maps each sampled id to its candidate set; ids missing
    /// from it are treated as having no candidates.
    pub fn new(sample: AnnotationSample, candidates: &BTreeMap<String, CandidateSet>) -> Self {
        let candidates = sample
            .test_ids
            .iter()
            .map(|id| {
                let ids = candidates
                    .get(id)
                    .map(|set| set.candidates.iter().map(|c| c.train_id.clone()).collect())
                    .unwrap_or_default();
                (id.clone(), ids)
            })
            .collect();
        Self {
            sample,
            candidates,
            history: Vec::new(),
            latest: BTreeMap::new(),
        }
    }

    pub fn sample(&self) -> &AnnotationSample {
        &self.sample
    }

    pub fn history(&self) -> &[AnnotationRecord] {
        &self.history
    }

    /// Checks `record` against the sample and its candidate set.
    pub fn validate(&self, record: &AnnotationRecord) -> Result<(), AnnotationError> {
        if record.annotator.trim().is_empty() {
            return Err(AnnotationError::Malformed("annotator name is empty"));
        }
        let candidates = self
            .candidates
            .get(&record.test_id)
            .ok_or_else(|| AnnotationError::UnknownTestId(record.test_id.clone()))?;
        if record.auto {
            if record.label != Label::NoOverlap {
                return Err(AnnotationError::Malformed("automatic labels must be no_overlap"));
            }
            if !candidates.is_empty() {
                return Err(AnnotationError::Malformed(
                    "automatic labels only apply to items without candidates",
                ));
            }
        } else if record.annotator == AUTO_ANNOTATOR {
            return Err(AnnotationError::Malformed("annotator name \"auto\" is reserved"));
        }
        match record.label {
            Label::Overlap if record.matched_train_ids.is_empty() => Err(AnnotationError::Malformed(
                "overlap verdicts must name at least one matched train id",
            )),
            Label::NoOverlap if !record.matched_train_ids.is_empty() => Err(
                AnnotationError::Malformed("no_overlap verdicts must not name matched train ids"),
            ),
            _ => {
                for train_id in &record.matched_train_ids {
                    if !candidates.contains(train_id) {
                        return Err(AnnotationError::NotACandidate {
                            test_id: record.test_id.clone(),
                            train_id: train_id.clone(),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    /// Validates and appends a record. A later timestamp (or an equal one
    /// appended later) supersedes the annotator's previous verdict; history
    /// is never rewritten.
    pub fn record(&mut self, record: AnnotationRecord) -> Result<Ack, AnnotationError> {
        self.validate(&record)?;
        let sequence = self.history.len();
        let per_item = self.latest.entry(record.test_id.clone()).or_default();
        let effective = match per_item.get(&record.annotator) {
            Some(&previous) => self.history[previous].timestamp <= record.timestamp,
            None => true,
        };
        if effective {
            per_item.insert(record.annotator.clone(), sequence);
        }
        let ack = Ack {
            test_id: record.test_id.clone(),
            annotator: record.annotator.clone(),
            sequence,
            effective,
        };
        self.history.push(record);
        Ok(ack)
    }

    /// The annotator's effective verdict on one item.
    pub fn verdict(&self, test_id: &str, annotator: &str) -> Option<&AnnotationRecord> {
        let index = self.latest.get(test_id)?.get(annotator)?;
        Some(&self.history[*index])
    }

    /// Effective labels of one annotator, keyed by test id.
    pub fn labels_of(&self, annotator: &str) -> BTreeMap<String, Label> {
        self.latest
            .iter()
            .filter_map(|(test_id, by_annotator)| {
                by_annotator
                    .get(annotator)
                    .map(|&i| (test_id.clone(), self.history[i].label))
            })
            .collect()
    }

    /// Aggregated label for one item: majority over human annotators with
    /// ties going to `overlap`; the automatic label when no human has judged
    /// the item.
    pub fn effective_label(&self, test_id: &str) -> Option<Label> {
        let by_annotator = self.latest.get(test_id)?;
        let (mut overlap, mut no_overlap, mut auto) = (0usize, 0usize, None);
        for &index in by_annotator.values() {
            let record = &self.history[index];
            if record.auto {
                auto = Some(record.label);
                continue;
            }
            match record.label {
                Label::Overlap => overlap += 1,
                Label::NoOverlap => no_overlap += 1,
            }
        }
        if overlap + no_overlap == 0 {
            auto
        } else if overlap >= no_overlap {
            Some(Label::Overlap)
        } else {
            Some(Label::NoOverlap)
        }
    }

    /// Effective labels for every sampled id that has one.
    pub fn effective_labels(&self) -> BTreeMap<String, Label> {
        self.sample
            .test_ids
            .iter()
            .filter_map(|id| self.effective_label(id).map(|l| (id.clone(), l)))
            .collect()
    }

    /// Sampled ids still lacking any label, in sample order.
    pub fn unlabeled(&self) -> Vec<&str> {
        self.sample
            .test_ids
            .iter()
            .filter(|id| self.effective_label(id).is_none())
            .map(String::as_str)
            .collect()
    }

    fn is_auto_labeled(&self, test_id: &str) -> bool {
        self.latest
            .get(test_id)
            .is_some_and(|m| m.values().any(|&i| self.history[i].auto))
    }

    /// First sampled id (sample order) that is neither auto-labeled nor
    /// judged by `annotator`.
    pub fn next_for(&self, annotator: &str) -> Option<&str> {
        self.sample
            .test_ids
            .iter()
            .find(|id| !self.is_auto_labeled(id) && self.verdict(id, annotator).is_none())
            .map(String::as_str)
    }

    pub fn progress(&self) -> Progress {
        let mut per_annotator: BTreeMap<String, usize> = BTreeMap::new();
        for by_annotator in self.latest.values() {
            for name in by_annotator.keys() {
                *per_annotator.entry(name.clone()).or_default() += 1;
            }
        }
        let total = self.sample.len();
        let completed = total - self.unlabeled().len();
        Progress {
            total,
            completed,
            remaining: total - completed,
            per_annotator,
        }
    }
}
