//! Domain types shared across the crate.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    /// Positions are 1-based.
    #[error("index {index} repeated at position {position}")]
    DuplicateIndex { index: usize, position: usize },
    #[error("index {index} at position {position} is outside 1..={n}")]
    OutOfRange {
        index: i64,
        position: usize,
        n: usize,
    },
    #[error("permutation has {got} entries, expected {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("identifier must be non-empty and contain no whitespace: {0:?}")]
    BadId(String),
    #[error("document {id}: modality {modality} requires {missing}")]
    MissingContent {
        id: String,
        modality: Modality,
        missing: &'static str,
    },
    #[error("query {0} has empty text")]
    EmptyQuery(String),
    #[error("duplicate document id {0} in candidate list")]
    DuplicateCandidate(String),
    #[error("score at position {0} is not finite")]
    NonFiniteScore(usize),
}

pub(crate) fn check_id(id: &str) -> Result<(), ModelError> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(ModelError::BadId(id.into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Image,
    Hybrid,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Text => "text",
            Modality::Image => "image",
            Modality::Hybrid => "hybrid",
        })
    }
}

/// One rerankable unit. `image_ref` is an opaque path or URI handed to the
/// backend as-is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    pub modality: Modality,
}

impl Document {
    pub fn text(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: Some(text.into()),
            image_ref: None,
            modality: Modality::Text,
        }
    }

    pub fn image(id: impl Into<String>, image_ref: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: None,
            image_ref: Some(image_ref.into()),
            modality: Modality::Image,
        }
    }

    pub fn hybrid(
        id: impl Into<String>,
        text: impl Into<String>,
        image_ref: impl Into<String>,
    ) -> Self {
        Document {
            id: id.into(),
            text: Some(text.into()),
            image_ref: Some(image_ref.into()),
            modality: Modality::Hybrid,
        }
    }

    /// Checks the id and the modality/content agreement.
    pub fn validate(&self) -> Result<(), ModelError> {
        check_id(&self.id)?;
        let need_text = matches!(self.modality, Modality::Text | Modality::Hybrid);
        let need_image = matches!(self.modality, Modality::Image | Modality::Hybrid);
        if need_text && self.text.is_none() {
            return Err(self.missing("text"));
        }
        if need_image && self.image_ref.is_none() {
            return Err(self.missing("image_ref"));
        }
        Ok(())
    }

    fn missing(&self, what: &'static str) -> ModelError {
        ModelError::MissingContent {
            id: self.id.clone(),
            modality: self.modality,
            missing: what,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Query {
            id: id.into(),
            text: text.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_id(&self.id)?;
        if self.text.is_empty() {
            return Err(ModelError::EmptyQuery(self.id.clone()));
        }
        Ok(())
    }
}

/// First-stage candidates for one query, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateList {
    pub query_id: String,
    pub doc_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_stage_scores: Option<Vec<f64>>,
}

impl CandidateList {
    pub fn new(query_id: impl Into<String>, doc_ids: Vec<String>) -> Self {
        CandidateList {
            query_id: query_id.into(),
            doc_ids,
            first_stage_scores: None,
        }
    }

    pub fn with_scores(mut self, scores: Vec<f64>) -> Self {
        self.first_stage_scores = Some(scores);
        self
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut sorted: Vec<&str> = self.doc_ids.iter().map(String::as_str).collect();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateCandidate(w[0].into()));
        }
        if let Some(scores) = &self.first_stage_scores {
            if scores.len() != self.doc_ids.len() {
                return Err(ModelError::LengthMismatch {
                    left: self.doc_ids.len(),
                    right: scores.len(),
                });
            }
        }
        Ok(())
    }
}

/// A total ordering of `n` candidates, stored as 1-based indices:
/// `order()[r]` is the candidate placed at rank `r + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// 0-based candidate indices in rank order.
    pub fn zero_based(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.order.iter().map(|&i| i - 1)
    }

    /// `ranks()[c]` is the 0-based rank of 0-based candidate `c`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = alloc::vec![0; self.order.len()];
        for (rank, cand) in self.zero_based().enumerate() {
            ranks[cand] = rank;
        }
        ranks
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            order: self.ranks().into_iter().map(|r| r + 1).collect(),
        }
    }

    pub fn reversed(&self) -> Permutation {
        Permutation {
            order: self.order.iter().rev().copied().collect(),
        }
    }

    /// Composes with a permutation of the same size: the result places
    /// `self.order[inner.order[r]]` at rank `r`.
    pub fn then(&self, inner: &Permutation) -> Permutation {
        debug_assert_eq!(self.len(), inner.len());
        Permutation {
            order: inner.zero_based().map(|i| self.order[i]).collect(),
        }
    }

    pub(crate) fn from_valid(order: Vec<usize>) -> Self {
        Permutation { order }
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = Vec::<i64>::deserialize(de)?;
        let n = raw.len();
        validate_permutation(&raw, n).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, idx) in self.order.iter().enumerate() {
            if i > 0 {
                f.write_str(" > ")?;
            }
            write!(f, "[{idx}]")?;
        }
        Ok(())
    }
}

/// Checks that `order` is a bijection on `1..=n`.
pub fn validate_permutation(order: &[i64], n: usize) -> Result<Permutation, ModelError> {
    let mut seen = alloc::vec![false; n];
    let mut out = Vec::with_capacity(order.len());
    for (pos, &idx) in order.iter().enumerate() {
        let position = pos + 1;
        if idx < 1 || idx as u64 > n as u64 {
            return Err(ModelError::OutOfRange {
                index: idx,
                position,
                n,
            });
        }
        let slot = idx as usize;
        if seen[slot - 1] {
            return Err(ModelError::DuplicateIndex {
                index: slot,
                position,
            });
        }
        seen[slot - 1] = true;
        out.push(slot);
    }
    if out.len() != n {
        return Err(ModelError::WrongLength {
            got: out.len(),
            expected: n,
        });
    }
    Ok(Permutation::from_valid(out))
}

/// `[1, 2, ..., n]`.
pub fn identity_permutation(n: usize) -> Permutation {
    Permutation::from_valid((1..=n).collect())
}

/// Reorders `items` so that `out[r] = items[perm.order()[r] - 1]`.
pub fn apply_permutation<T: Clone>(items: &[T], perm: &Permutation) -> Result<Vec<T>, ModelError> {
    if items.len() != perm.len() {
        return Err(ModelError::LengthMismatch {
            left: items.len(),
            right: perm.len(),
        });
    }
    Ok(perm.zero_based().map(|i| items[i].clone()).collect())
}

/// One finite score per candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self, ModelError> {
        if let Some(pos) = scores.iter().position(|s| !s.is_finite()) {
            return Err(ModelError::NonFiniteScore(pos));
        }
        Ok(ScoreVector(scores))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}
