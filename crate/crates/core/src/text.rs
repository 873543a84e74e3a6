//! Answer normalization and question tokenization.

use alloc::string::String;
use alloc::vec::Vec;

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Normalizes an answer string for comparison.
///
/// Lowercases, deletes ASCII punctuation (no space is inserted, so
/// `hour-long` becomes `hourlong`), drops the whitespace tokens `a`, `an` and
/// `the`, and joins the remaining tokens with single spaces. The result may be
/// empty.
pub fn normalize_answer(text: &str) -> String {
    let mut stripped = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_ascii_punctuation() {
            continue;
        }
        stripped.extend(c.to_lowercase());
    }

    let mut out = String::with_capacity(stripped.len());
    for token in stripped.split_whitespace() {
        if ARTICLES.contains(&token) {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

/// Splits a question into lowercase alphanumeric tokens.
///
/// Every non-alphanumeric character is a split point; empty tokens are dropped.
pub fn tokenize_question(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(core::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// An answer string together with its normalized form and tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedText {
    pub original: String,
    pub normalized: String,
    pub tokens: Vec<String>,
}

impl NormalizedText {
    pub fn new(original: &str) -> Self {
        let normalized = normalize_answer(original);
        let tokens = normalized.split(' ').filter(|t| !t.is_empty()).map(String::from).collect();
        Self {
            original: String::from(original),
            normalized,
            tokens,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.normalized.is_empty()
    }
}
