//! Train/test leakage analysis for open-domain question answering datasets.
//!
//! The crate is `no_std` (with `alloc`) and contains only pure computation:
//! answer normalization, answer-overlap detection, candidate generation for
//! duplicate-question annotation, annotation bookkeeping and agreement,
//! stratified exact-match evaluation, and the nearest-neighbor copy baselines.
//! File formats, the annotation server and the command-line driver live in the
//! `qaleak` crate.

#![no_std]

extern crate alloc;

pub mod annotation;
pub mod dataset;
pub mod eval;
pub mod nn;
pub mod overlap;
mod sampling;
pub mod text;

pub use annotation::{
    auto_label_empty, cohens_kappa, sample_for_annotation, Ack, Agreement, AnnotationError,
    AnnotationLog, AnnotationRecord, AnnotationSample, Label, Progress,
};
pub use dataset::{DatasetError, DatasetSplit, QaPair, SplitName};
pub use eval::{
    evaluate, exact_match, stratify, BucketScore, EvalError, Prediction, StratifiedReport,
    Stratum, StratumAssignment,
};
pub use nn::{dense_predict, EmbeddingTable, NnError, NnPrediction, TfIdfIndex};
pub use overlap::{
    answers_related, compute_answer_overlap, generate_candidates, word_overlap,
    AnswerOverlapResult, Candidate, CandidateIndex, CandidateSet, DEFAULT_CANDIDATE_CAP,
};
pub use text::{normalize_answer, tokenize_question, NormalizedText};
