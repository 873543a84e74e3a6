#![allow(dead_code)]

use std::collections::BTreeSet;

use qaleak_core::{normalize_answer, tokenize_question, DatasetSplit, QaPair, SplitName};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::Rng;

/// Answer strings with planted aliases: exact repeats, contiguous sub-spans,
/// case/punctuation/article variants and a few near misses.
pub const ANSWER_POOL: &[&str] = &[
    "Alan Shearer",
    "Shearer",
    "alan shearer!",
    "New York",
    "York University",
    "new york city",
    "The Beatles",
    "beatles",
    "A Storm",
    "storm",
    "retina",
    "the retina",
    "Cloves",
    "8",
    "eight",
    "Harry S. Truman",
    "Harry Truman",
    "truman",
    "opera",
    "era",
    "Death in the afternoon",
    "afternoon",
    "Live and Let Die",
    "let die",
    "1,020 -- 1,080 kg",
    "1020",
    "the",
    "Brasília",
];

pub const QUESTION_WORDS: &[&str] = &[
    "who", "what", "when", "where", "played", "won", "the", "wall", "pink", "first", "cup",
    "world", "in", "of", "nfl", "record", "river", "city", "song", "wrote", "is", "a",
];

pub fn random_question(rng: &mut StdRng) -> String {
    let len = rng.random_range(0..8);
    let mut words: Vec<&str> = (0..len).map(|_| *QUESTION_WORDS.choose(rng).unwrap()).collect();
    if words.is_empty() {
        words.push("?");
    }
    let mut q = words.join(" ");
    q.push('?');
    q
}

pub fn random_answers(rng: &mut StdRng, pool: &[&str]) -> Vec<String> {
    let n = rng.random_range(1..=3);
    (0..n).map(|_| pool.choose(rng).unwrap().to_string()).collect()
}

pub fn random_split(rng: &mut StdRng, name: SplitName, max: usize, prefix: &str) -> DatasetSplit {
    let n = rng.random_range(1..=max);
    let items = (0..n)
        .map(|i| QaPair::new(format!("{prefix}{i}"), random_question(rng), random_answers(rng, ANSWER_POOL)))
        .collect();
    DatasetSplit::new(name, items).unwrap()
}

/// Pairwise answer-overlap oracle: (overlapping, matched train ids, reference).
pub fn brute_force_overlap(item: &QaPair, train: &DatasetSplit) -> (bool, Vec<String>, String) {
    let mut matching: BTreeSet<String> = BTreeSet::new();
    for t in &item.answers {
        let t = normalize_answer(t);
        if t.is_empty() {
            continue;
        }
        for other in train.items() {
            if other.answers.iter().any(|r| normalize_answer(r) == t) {
                matching.insert(t.clone());
            }
        }
    }
    match matching.into_iter().next() {
        None => (false, vec![], String::new()),
        Some(reference) => {
            let ids = train
                .items()
                .iter()
                .filter(|o| o.answers.iter().any(|r| normalize_answer(r) == reference))
                .map(|o| o.id.clone())
                .collect();
            (true, ids, reference)
        }
    }
}

/// Space-padded substring test: `needle` is a whole-token run of `haystack`.
fn token_run_in(haystack: &str, needle: &str) -> bool {
    format!(" {haystack} ").contains(&format!(" {needle} "))
}

pub fn brute_force_related(test_refs: &[String], train_refs: &[String]) -> bool {
    for t in test_refs {
        let t = normalize_answer(t);
        if t.is_empty() {
            continue;
        }
        for r in train_refs {
            let r = normalize_answer(r);
            if r.is_empty() {
                continue;
            }
            if t == r || token_run_in(&r, &t) || token_run_in(&t, &r) {
                return true;
            }
        }
    }
    false
}

/// Candidate oracle: filter every train item, score with set intersection,
/// stable-sort by descending score, truncate.
pub fn brute_force_candidates(item: &QaPair, train: &DatasetSplit, cap: usize) -> Vec<(String, u32)> {
    let query: BTreeSet<String> = tokenize_question(&item.question).into_iter().collect();
    let mut scored: Vec<(String, u32)> = train
        .items()
        .iter()
        .filter(|o| brute_force_related(&item.answers, &o.answers))
        .map(|o| {
            let words: BTreeSet<String> = tokenize_question(&o.question).into_iter().collect();
            (o.id.clone(), query.intersection(&words).count() as u32)
        })
        .collect();
    scored.sort_by_key(|s| std::cmp::Reverse(s.1));
    scored.truncate(cap);
    scored
}
