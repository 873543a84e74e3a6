//! Nearest-neighbor copy baselines: answer a test question with the first
//! reference of the most similar training question.
//!
//! Two similarity functions are provided. [`TfIdfIndex`] scores question text
//! by cosine similarity of smoothed TF-IDF vectors; [`EmbeddingTable`] holds
//! precomputed question embeddings compared by raw dot product. Both search
//! exhaustively and break ties toward the lowest train ordinal.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetSplit, QaPair};
use crate::text::tokenize_question;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnPrediction {
    pub test_id: String,
    pub matched_train_id: String,
    pub score: f64,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NnError {
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error("non-finite value in embedding row {row}")]
    NonFinite { row: usize },
    #[error("{ids} ids for {rows} embedding rows")]
    IdCountMismatch { ids: usize, rows: usize },
    #[error("embedding id {found:?} at row {row} does not match train id {expected:?}")]
    IdMismatch { row: usize, expected: String, found: String },
    #[error("training split is empty")]
    EmptyTrain,
}

/// Inverted index over tokenized training questions.
///
/// Term weights are `tf * (ln((N + 1) / (df + 1)) + 1)` and documents are
/// compared by cosine similarity.
#[derive(Debug, Clone)]
pub struct TfIdfIndex {
    vocabulary: HashMap<String, u32>,
    document_frequency: Vec<u32>,
    /// term id -> (train ordinal, term frequency), ordinals ascending
    postings: Vec<Vec<(u32, u32)>>,
    vector_norms: Vec<f64>,
    train_ids: Vec<String>,
}

impl TfIdfIndex {
    pub fn build(train: &DatasetSplit) -> Result<Self, NnError> {
        if train.is_empty() {
            return Err(NnError::EmptyTrain);
        }
        let mut vocabulary: HashMap<String, u32> = HashMap::new();
        let mut postings: Vec<Vec<(u32, u32)>> = Vec::new();
        let mut doc_terms: Vec<Vec<(u32, u32)>> = Vec::with_capacity(train.len());

        for (ordinal, item) in train.iter().enumerate() {
            let mut terms: Vec<u32> = tokenize_question(&item.question)
                .into_iter()
                .map(|t| {
                    let next = vocabulary.len() as u32;
                    *vocabulary.entry(t).or_insert(next)
                })
                .collect();
            terms.sort_unstable();
            let counts = run_lengths(&terms);
            for &(term, tf) in &counts {
                if postings.len() <= term as usize {
                    postings.resize_with(term as usize + 1, Vec::new);
                }
                postings[term as usize].push((ordinal as u32, tf));
            }
            doc_terms.push(counts);
        }

        let document_frequency: Vec<u32> = postings.iter().map(|p| p.len() as u32).collect();
        let n = train.len();
        let vector_norms = doc_terms
            .iter()
            .map(|terms| {
                let sum: f64 = terms
                    .iter()
                    .map(|&(term, tf)| {
                        let w = tf as f64 * idf(n, document_frequency[term as usize]);
                        w * w
                    })
                    .sum();
                libm::sqrt(sum)
            })
            .collect();

        Ok(Self {
            vocabulary,
            document_frequency,
            postings,
            vector_norms,
            train_ids: train.iter().map(|item| item.id.clone()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.train_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_ids.is_empty()
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.vocabulary.get(term).copied()
    }

    pub fn document_frequency(&self, term: &str) -> Option<u32> {
        self.term_id(term).map(|id| self.document_frequency[id as usize])
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.document_frequency(term).map(|df| idf(self.len(), df))
    }

    /// Unnormalized weight of `term` in train item `ordinal`; zero when absent.
    pub fn weight(&self, term: &str, ordinal: usize) -> f64 {
        let Some(id) = self.term_id(term) else { return 0.0 };
        let list = &self.postings[id as usize];
        match list.binary_search_by_key(&(ordinal as u32), |&(o, _)| o) {
            Ok(i) => list[i].1 as f64 * idf(self.len(), self.document_frequency[id as usize]),
            Err(_) => 0.0,
        }
    }

    pub fn vector_norms(&self) -> &[f64] {
        &self.vector_norms
    }

    pub fn train_ids(&self) -> &[String] {
        &self.train_ids
    }

    /// Most similar train ordinal and its cosine similarity. Queries sharing
    /// no vocabulary with the index return ordinal 0 with score 0.
    pub fn best_match(&self, question: &str) -> (usize, f64) {
        let mut terms: Vec<u32> = tokenize_question(question)
            .iter()
            .filter_map(|t| self.term_id(t))
            .collect();
        terms.sort_unstable();
        let query = run_lengths(&terms);

        let n = self.len();
        let mut query_norm = 0.0;
        let mut dots = vec![0.0f64; n];
        let mut touched: Vec<u32> = Vec::new();
        for &(term, tf) in &query {
            let idf = idf(n, self.document_frequency[term as usize]);
            let q = tf as f64 * idf;
            query_norm += q * q;
            for &(ordinal, dtf) in &self.postings[term as usize] {
                let slot = &mut dots[ordinal as usize];
                if *slot == 0.0 {
                    touched.push(ordinal);
                }
                *slot += q * dtf as f64 * idf;
            }
        }
        if touched.is_empty() {
            return (0, 0.0);
        }
        let query_norm = libm::sqrt(query_norm);
        touched.sort_unstable();

        let mut best = (0usize, 0.0f64);
        for ordinal in touched {
            let o = ordinal as usize;
            let score = dots[o] / (query_norm * self.vector_norms[o]);
            if score > best.1 {
                best = (o, score);
            }
        }
        best
    }

    /// Answers `item` by copying the first reference of its best match in
    /// `train`, which must be the split the index was built from.
    pub fn predict(&self, item: &QaPair, train: &DatasetSplit) -> NnPrediction {
        debug_assert_eq!(train.len(), self.len());
        let (ordinal, score) = self.best_match(&item.question);
        copy_answer(&item.id, train, ordinal, score)
    }
}

fn idf(n: usize, df: u32) -> f64 {
    libm::log((n as f64 + 1.0) / (df as f64 + 1.0)) + 1.0
}

/// Counts of each value in a sorted slice.
fn run_lengths(sorted: &[u32]) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = Vec::new();
    for &v in sorted {
        match out.last_mut() {
            Some((last, count)) if *last == v => *count += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

fn copy_answer(test_id: &str, train: &DatasetSplit, ordinal: usize, score: f64) -> NnPrediction {
    let matched = &train.items()[ordinal];
    NnPrediction {
        test_id: String::from(test_id),
        matched_train_id: matched.id.clone(),
        score,
        answer: matched.answers[0].clone(),
    }
}

/// Row-major matrix of question embeddings with one id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    ids: Vec<String>,
    dimension: usize,
    values: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(ids: Vec<String>, dimension: usize, values: Vec<f32>) -> Result<Self, NnError> {
        if dimension == 0 {
            return Err(NnError::ZeroDimension);
        }
        if !values.len().is_multiple_of(dimension) {
            return Err(NnError::DimensionMismatch {
                left: values.len(),
                right: dimension,
            });
        }
        let rows = values.len() / dimension;
        if ids.len() != rows {
            return Err(NnError::IdCountMismatch {
                ids: ids.len(),
                rows,
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(NnError::NonFinite { row: pos / dimension });
        }
        Ok(Self {
            ids,
            dimension,
            values,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, index: usize) -> &[f32] {
        &self.values[index * self.dimension..(index + 1) * self.dimension]
    }

    /// Row with the largest dot product against `query`, lowest index on ties.
    pub fn best_match(&self, query: &[f32]) -> (usize, f64) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (index, row) in self.values.chunks_exact(self.dimension).enumerate() {
            let score = dot(row, query);
            if score > best.1 {
                best = (index, score);
            }
        }
        best
    }

    /// Checks that this table can answer queries from `test` against `train`.
    pub fn check_compatible(&self, test: &EmbeddingTable, train: &DatasetSplit) -> Result<(), NnError> {
        if self.dimension != test.dimension {
            return Err(NnError::DimensionMismatch {
                left: test.dimension,
                right: self.dimension,
            });
        }
        if self.rows() == 0 || train.is_empty() {
            return Err(NnError::EmptyTrain);
        }
        if self.rows() != train.len() {
            return Err(NnError::IdCountMismatch {
                ids: train.len(),
                rows: self.rows(),
            });
        }
        for (row, (id, item)) in self.ids.iter().zip(train.iter()).enumerate() {
            if *id != item.id {
                return Err(NnError::IdMismatch {
                    row,
                    expected: item.id.clone(),
                    found: id.clone(),
                });
            }
        }
        Ok(())
    }
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// Dense nearest-neighbor answers for every row of `test_table`.
pub fn dense_predict(
    test_table: &EmbeddingTable,
    train_table: &EmbeddingTable,
    train: &DatasetSplit,
) -> Result<Vec<NnPrediction>, NnError> {
    train_table.check_compatible(test_table, train)?;
    Ok((0..test_table.rows())
        .map(|row| {
            let (ordinal, score) = train_table.best_match(test_table.row(row));
            copy_answer(&test_table.ids[row], train, ordinal, score)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SplitName;
    use alloc::format;

    fn train_split(questions: &[&str]) -> DatasetSplit {
        let items = questions
            .iter()
            .enumerate()
            .map(|(i, q)| QaPair::new(format!("t{i}"), *q, vec![format!("answer {i}"), "alias".into()]))
            .collect();
        DatasetSplit::new(SplitName::Train, items).unwrap()
    }

    #[test]
    fn single_word_corpus_has_uniform_idf() {
        let index = TfIdfIndex::build(&train_split(&["alpha", "beta", "gamma"])).unwrap();
        let idfs: Vec<f64> = ["alpha", "beta", "gamma"].iter().map(|t| index.idf(t).unwrap()).collect();
        assert_eq!(index.document_frequency("beta"), Some(1));
        assert!(idfs.iter().all(|&v| v == idfs[0]));
    }

    #[test]
    fn ubiquitous_term_has_unit_idf() {
        let index = TfIdfIndex::build(&train_split(&["the cat", "the dog", "the end"])).unwrap();
        assert_eq!(index.idf("the"), Some(1.0));
    }

    #[test]
    fn duplicate_question_scores_one() {
        let train = train_split(&["who wrote hamlet", "who played pink in the wall", "where is rome"]);
        let index = TfIdfIndex::build(&train).unwrap();
        let item = QaPair::new("q", "Who played Pink in the Wall?", vec!["x".into()]);
        let p = index.predict(&item, &train);
        assert_eq!(p.matched_train_id, "t1");
        assert!((p.score - 1.0).abs() < 1e-9);
        assert_eq!(p.answer, "answer 1");
    }

    #[test]
    fn disjoint_vocabulary_returns_first_item() {
        let train = train_split(&["who wrote hamlet", "where is rome"]);
        let index = TfIdfIndex::build(&train).unwrap();
        assert_eq!(index.best_match("zebra crossing"), (0, 0.0));
        assert_eq!(index.best_match(""), (0, 0.0));
    }

    #[test]
    fn empty_question_is_never_retrieved() {
        let train = train_split(&["???", "where is rome"]);
        let index = TfIdfIndex::build(&train).unwrap();
        assert_eq!(index.vector_norms()[0], 0.0);
        assert_eq!(index.best_match("rome").0, 1);
    }

    #[test]
    fn empty_train_is_rejected() {
        let train = DatasetSplit::new(SplitName::Train, Vec::new()).unwrap();
        assert_eq!(TfIdfIndex::build(&train).unwrap_err(), NnError::EmptyTrain);
    }

    fn table(ids: usize, dimension: usize, values: Vec<f32>) -> Result<EmbeddingTable, NnError> {
        EmbeddingTable::new((0..ids).map(|i| format!("t{i}")).collect(), dimension, values)
    }

    #[test]
    fn embedding_validation() {
        assert!(table(3, 4, vec![0.0; 12]).is_ok());
        let mut values = vec![0.0; 12];
        values[9] = f32::NAN;
        assert_eq!(table(3, 4, values).unwrap_err(), NnError::NonFinite { row: 2 });
        assert_eq!(
            table(2, 4, vec![0.0; 12]).unwrap_err(),
            NnError::IdCountMismatch { ids: 2, rows: 3 }
        );
        assert_eq!(table(0, 0, vec![]).unwrap_err(), NnError::ZeroDimension);
    }

    #[test]
    fn basis_vectors_match_themselves() {
        let train = train_split(&["a", "b", "c", "d"]);
        let mut values = vec![0.0; 16];
        for i in 0..4 {
            values[i * 4 + i] = 1.0;
        }
        let train_table = table(4, 4, values).unwrap();
        let test_table = EmbeddingTable::new(
            vec!["q0".into(), "q1".into()],
            4,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let preds = dense_predict(&test_table, &train_table, &train).unwrap();
        assert_eq!(preds[0].matched_train_id, "t2");
        assert_eq!(preds[0].score, 1.0);
        // all-zero query ties everywhere
        assert_eq!(preds[1].matched_train_id, "t0");
        assert_eq!(preds[1].score, 0.0);
    }

    #[test]
    fn dense_checks_alignment() {
        let train = train_split(&["a", "b"]);
        let train_table = table(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let wide = EmbeddingTable::new(vec!["q".into()], 3, vec![0.0; 3]).unwrap();
        assert!(matches!(
            dense_predict(&wide, &train_table, &train),
            Err(NnError::DimensionMismatch { .. })
        ));
        let renamed =
            EmbeddingTable::new(vec!["t0".into(), "zz".into()], 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let test = EmbeddingTable::new(vec!["q".into()], 2, vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            dense_predict(&test, &renamed, &train),
            Err(NnError::IdMismatch { row: 1, .. })
        ));
    }
}
