//! Question/answer pairs and dataset splits.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One question with its reference answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub id: String,
    pub question: String,
    pub answers: Vec<String>,
}

impl QaPair {
    pub fn new(id: impl Into<String>, question: impl Into<String>, answers: Vec<String>) -> Self {
        Self {
            id: id.into(),
            question: question.into(),
            answers,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("duplicate id {id:?} at position {position}")]
    DuplicateId { id: String, position: usize },
    #[error("item {id:?} has an empty question")]
    EmptyQuestion { id: String },
    #[error("item {id:?} has no answers")]
    NoAnswers { id: String },
    #[error("item {id:?} has an empty answer reference")]
    EmptyAnswer { id: String },
}

/// An ordered, validated collection of [`QaPair`]s.
///
/// Item order is load order. Ids are unique and every item carries at least
/// one non-blank answer reference.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    name: SplitName,
    items: Vec<QaPair>,
    positions: HashMap<String, usize>,
}

impl DatasetSplit {
    pub fn new(name: SplitName, items: Vec<QaPair>) -> Result<Self, DatasetError> {
        let mut positions = HashMap::with_capacity(items.len());
        for (position, item) in items.iter().enumerate() {
            validate_item(item)?;
            if positions.insert(item.id.clone(), position).is_some() {
                return Err(DatasetError::DuplicateId {
                    id: item.id.clone(),
                    position,
                });
            }
        }
        Ok(Self {
            name,
            items,
            positions,
        })
    }

    pub fn name(&self) -> SplitName {
        self.name
    }

    pub fn items(&self) -> &[QaPair] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&QaPair> {
        self.position(id).map(|p| &self.items[p])
    }

    /// Load-order position of `id`.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, QaPair> {
        self.items.iter()
    }

    /// Concatenates `other` after `self`, prefixing its ids with `prefix`.
    pub fn merged_with(&self, other: &DatasetSplit, prefix: &str) -> Result<Self, DatasetError> {
        let mut items = self.items.clone();
        items.extend(other.items.iter().map(|item| {
            let mut id = String::from(prefix);
            id.push_str(&item.id);
            QaPair {
                id,
                ..item.clone()
            }
        }));
        DatasetSplit::new(self.name, items)
    }
}

impl<'a> IntoIterator for &'a DatasetSplit {
    type Item = &'a QaPair;
    type IntoIter = core::slice::Iter<'a, QaPair>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

pub(crate) fn validate_item(item: &QaPair) -> Result<(), DatasetError> {
    if item.question.trim().is_empty() {
        return Err(DatasetError::EmptyQuestion { id: item.id.clone() });
    }
    if item.answers.is_empty() {
        return Err(DatasetError::NoAnswers { id: item.id.clone() });
    }
    if item.answers.iter().any(|a| a.trim().is_empty()) {
        return Err(DatasetError::EmptyAnswer { id: item.id.clone() });
    }
    Ok(())
}

/// Checks a single record without building a split.
pub fn validate(item: &QaPair) -> Result<(), DatasetError> {
    validate_item(item)
}
