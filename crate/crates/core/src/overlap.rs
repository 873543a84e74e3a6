//! Test/train answer overlap and candidate selection for duplicate annotation.
//!
//! Two training items are linked to a test item:
//!
//! * by *answer overlap* when a normalized test reference equals a normalized
//!   train reference;
//! * by *answer relatedness* when additionally one reference's token sequence
//!   occurs contiguously inside the other's.
//!
//! Related training questions are ranked by unique-token overlap with the test
//! question and capped to form the [`CandidateSet`] shown to annotators.
//! Both computations go through hashed indexes over the training split, so a
//! query never scans the whole split.

use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetSplit, QaPair};
use crate::text::{normalize_answer, tokenize_question, NormalizedText};

pub const DEFAULT_CANDIDATE_CAP: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOverlapResult {
    pub test_id: String,
    pub overlapping: bool,
    /// Train items (load order) carrying `matched_reference`.
    pub matched_train_ids: Vec<String>,
    /// Normalized reference shared with the train items; empty when none.
    pub matched_reference: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub train_id: String,
    pub score: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub test_id: String,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn contains(&self, train_id: &str) -> bool {
        self.candidates.iter().any(|c| c.train_id == train_id)
    }
}

/// Number of distinct tokens shared by the two token lists.
pub fn word_overlap<S: AsRef<str>>(test_tokens: &[S], train_tokens: &[S]) -> u32 {
    let test: HashSet<&str> = test_tokens.iter().map(AsRef::as_ref).collect();
    let train: HashSet<&str> = train_tokens.iter().map(AsRef::as_ref).collect();
    test.intersection(&train).count() as u32
}

/// Whether any pair of references is equal or contiguously contained one in
/// the other, after normalization. References that normalize to the empty
/// string never relate.
pub fn answers_related<S: AsRef<str>>(test_refs: &[S], train_refs: &[S]) -> bool {
    let test: Vec<NormalizedText> = normalized_refs(test_refs);
    let train: Vec<NormalizedText> = normalized_refs(train_refs);
    test.iter().any(|t| {
        train
            .iter()
            .any(|r| contains_run(&r.tokens, &t.tokens) || contains_run(&t.tokens, &r.tokens))
    })
}

fn normalized_refs<S: AsRef<str>>(refs: &[S]) -> Vec<NormalizedText> {
    refs.iter()
        .map(|r| NormalizedText::new(r.as_ref()))
        .filter(|n| !n.is_empty())
        .collect()
}

/// True when `needle` occurs as a contiguous run inside `haystack`.
fn contains_run<T: PartialEq>(haystack: &[T], needle: &[T]) -> bool {
    !needle.is_empty()
        && needle.len() <= haystack.len()
        && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Answer overlap for every test item, in test load order.
pub fn compute_answer_overlap(test: &DatasetSplit, train: &DatasetSplit) -> Vec<AnswerOverlapResult> {
    let index = AnswerIndex::new(train);
    test.iter().map(|item| index.overlap(item, train)).collect()
}

/// Candidate set for a single test item. Builds a fresh index; use
/// [`CandidateIndex`] when querying many items against the same split.
pub fn generate_candidates(test_item: &QaPair, train: &DatasetSplit, cap: usize) -> CandidateSet {
    CandidateIndex::new(train).candidates(test_item, cap)
}

/// Exact-match index from normalized reference to train ordinals.
struct AnswerIndex {
    by_reference: HashMap<String, Vec<u32>>,
}

impl AnswerIndex {
    fn new(train: &DatasetSplit) -> Self {
        let mut by_reference: HashMap<String, Vec<u32>> = HashMap::new();
        for (ordinal, item) in train.iter().enumerate() {
            for answer in &item.answers {
                let normalized = normalize_answer(answer);
                if normalized.is_empty() {
                    continue;
                }
                let ordinals = by_reference.entry(normalized).or_default();
                if ordinals.last() != Some(&(ordinal as u32)) {
                    ordinals.push(ordinal as u32);
                }
            }
        }
        Self { by_reference }
    }

    fn lookup(&self, normalized: &str) -> Option<&[u32]> {
        self.by_reference.get(normalized).map(Vec::as_slice)
    }

    fn overlap(&self, item: &QaPair, train: &DatasetSplit) -> AnswerOverlapResult {
        // The smallest matching reference is reported so the result does not
        // depend on the order of the answers list.
        let best = item
            .answers
            .iter()
            .map(|a| normalize_answer(a))
            .filter(|n| !n.is_empty())
            .filter_map(|n| self.lookup(&n).map(|ordinals| (n, ordinals)))
            .min_by(|a, b| a.0.cmp(&b.0));
        match best {
            Some((reference, ordinals)) => AnswerOverlapResult {
                test_id: item.id.clone(),
                overlapping: true,
                matched_train_ids: ordinals
                    .iter()
                    .map(|&o| train.items()[o as usize].id.clone())
                    .collect(),
                matched_reference: reference,
            },
            None => AnswerOverlapResult {
                test_id: item.id.clone(),
                overlapping: false,
                matched_train_ids: Vec::new(),
                matched_reference: String::new(),
            },
        }
    }
}

/// Reusable index for answer-overlap and candidate queries against one
/// training split. Immutable after construction; queries take `&self`.
pub struct CandidateIndex<'a> {
    train: &'a DatasetSplit,
    answers: AnswerIndex,
    answer_vocab: HashMap<String, u32>,
    /// Token-id sequence and owning train ordinal of each non-empty reference.
    references: Vec<(Vec<u32>, u32)>,
    /// Answer token id -> indices into `references` (ascending, deduplicated).
    postings: Vec<Vec<u32>>,
    question_vocab: HashMap<String, u32>,
    /// Sorted unique question token ids per train ordinal.
    question_tokens: Vec<Vec<u32>>,
}

impl<'a> CandidateIndex<'a> {
    pub fn new(train: &'a DatasetSplit) -> Self {
        let mut answer_vocab: HashMap<String, u32> = HashMap::new();
        let mut references = Vec::new();
        let mut postings: Vec<Vec<u32>> = Vec::new();
        let mut question_vocab: HashMap<String, u32> = HashMap::new();
        let mut question_tokens = Vec::with_capacity(train.len());

        for (ordinal, item) in train.iter().enumerate() {
            for answer in &item.answers {
                let normalized = NormalizedText::new(answer);
                if normalized.is_empty() {
                    continue;
                }
                let ids: Vec<u32> = normalized
                    .tokens
                    .into_iter()
                    .map(|t| intern(&mut answer_vocab, t))
                    .collect();
                let ref_index = references.len() as u32;
                for &id in &ids {
                    if postings.len() <= id as usize {
                        postings.resize_with(id as usize + 1, Vec::new);
                    }
                    let list = &mut postings[id as usize];
                    if list.last() != Some(&ref_index) {
                        list.push(ref_index);
                    }
                }
                references.push((ids, ordinal as u32));
            }

            let mut ids: Vec<u32> = tokenize_question(&item.question)
                .into_iter()
                .map(|t| intern(&mut question_vocab, t))
                .collect();
            ids.sort_unstable();
            ids.dedup();
            question_tokens.push(ids);
        }

        Self {
            train,
            answers: AnswerIndex::new(train),
            answer_vocab,
            references,
            postings,
            question_vocab,
            question_tokens,
        }
    }

    pub fn train(&self) -> &'a DatasetSplit {
        self.train
    }

    pub fn answer_overlap(&self, item: &QaPair) -> AnswerOverlapResult {
        self.answers.overlap(item, self.train)
    }

    /// Train ordinals (ascending) whose answers relate to `item`'s answers.
    pub fn related_ordinals(&self, item: &QaPair) -> Vec<u32> {
        let mut related = Vec::new();
        for answer in &item.answers {
            let normalized = NormalizedText::new(answer);
            if normalized.is_empty() {
                continue;
            }
            self.collect_contained(&normalized.tokens, &mut related);
            self.collect_containing(&normalized.tokens, &mut related);
        }
        related.sort_unstable();
        related.dedup();
        related
    }

    /// Train references that are a contiguous run of `tokens` (including
    /// equality): every sub-span is looked up in the exact index.
    fn collect_contained(&self, tokens: &[String], out: &mut Vec<u32>) {
        let mut span = String::new();
        for start in 0..tokens.len() {
            span.clear();
            for (offset, token) in tokens[start..].iter().enumerate() {
                if offset > 0 {
                    span.push(' ');
                }
                span.push_str(token);
                if let Some(ordinals) = self.answers.lookup(&span) {
                    out.extend_from_slice(ordinals);
                }
            }
        }
    }

    /// Train references containing `tokens` as a contiguous run. Scans the
    /// shortest posting list among the query's tokens.
    fn collect_containing(&self, tokens: &[String], out: &mut Vec<u32>) {
        let mut ids = Vec::with_capacity(tokens.len());
        for token in tokens {
            match self.answer_vocab.get(token.as_str()) {
                Some(&id) => ids.push(id),
                None => return,
            }
        }
        let Some(rarest) = ids.iter().min_by_key(|&&id| self.postings[id as usize].len()) else {
            return;
        };
        for &ref_index in &self.postings[*rarest as usize] {
            let (reference, ordinal) = &self.references[ref_index as usize];
            if contains_run(reference, &ids) {
                out.push(*ordinal);
            }
        }
    }

    /// Ranked, capped candidate set for one test item.
    pub fn candidates(&self, item: &QaPair, cap: usize) -> CandidateSet {
        let mut query: Vec<u32> = tokenize_question(&item.question)
            .iter()
            .filter_map(|t| self.question_vocab.get(t.as_str()).copied())
            .collect();
        query.sort_unstable();
        query.dedup();

        let mut scored: Vec<(u32, u32)> = self
            .related_ordinals(item)
            .into_iter()
            .map(|ordinal| {
                (
                    sorted_intersection_len(&query, &self.question_tokens[ordinal as usize]),
                    ordinal,
                )
            })
            .collect();
        // Stable on ascending ordinals, so equal scores keep load order.
        scored.sort_by_key(|s| core::cmp::Reverse(s.0));
        scored.truncate(cap);

        CandidateSet {
            test_id: item.id.clone(),
            candidates: scored
                .into_iter()
                .map(|(score, ordinal)| Candidate {
                    train_id: self.train.items()[ordinal as usize].id.clone(),
                    score,
                })
                .collect(),
        }
    }
}

fn intern(vocab: &mut HashMap<String, u32>, token: String) -> u32 {
    let next = vocab.len() as u32;
    *vocab.entry(token).or_insert(next)
}

fn sorted_intersection_len(a: &[u32], b: &[u32]) -> u32 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
