//! Embedding-space geometry and subset selection.
//!
//! Similarities and distances are always accumulated in `f64` with a fixed
//! reduction order, so every routine here is bit-reproducible.

mod baseline;
mod diversity;
mod filter;
mod geometry;
mod retrieve;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{kmeans_centroid_select, random_select, KMEANS_DEFAULT_ITERS};
pub use diversity::{
    brute_force_diversity_oracle, greedy_diversity_select, DiversityConfig, DiversityMetric,
    ORACLE_MAX_RECORDS,
};
pub use filter::{quality_filter, FilterReport, QualityPair, DEFAULT_QUALITY_THRESHOLD};
pub use geometry::{cosine_sim, dot, euclidean_dist, l2_norm};
pub use retrieve::{top_k_by_distance, Neighbor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("record {id:?} has dimension {got}, collection uses {expected}")]
    RecordDimension {
        id: String,
        expected: usize,
        got: usize,
    },
    #[error("zero vector{}", .id.as_ref().map(|i| alloc::format!(" for record {i:?}")).unwrap_or_default())]
    ZeroVector { id: Option<String> },
    #[error("record {0:?} has a non-finite component")]
    NonFinite(String),
    #[error("record {0:?} has an empty vector")]
    EmptyVector(String),
    #[error("empty collection")]
    EmptyCollection,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds collection size {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("oracle accepts at most {max} records, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("seed index {index} out of range for {n} records")]
    BadSeedIndex { index: usize, n: usize },
}

/// An identifier and its dense vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vector: Vec<f64>,
}

impl EmbeddingRecord {
    pub fn new(id: impl Into<String>, vector: Vec<f64>) -> Self {
        EmbeddingRecord {
            id: id.into(),
            vector,
        }
    }

    /// Widens single-precision storage; all arithmetic is done in `f64`.
    pub fn from_f32(id: impl Into<String>, vector: &[f32]) -> Self {
        EmbeddingRecord {
            id: id.into(),
            vector: vector.iter().map(|&x| f64::from(x)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// Checks that a collection is non-empty, finite and of uniform positive
/// dimension. Returns that dimension.
pub fn check_collection(records: &[EmbeddingRecord]) -> Result<usize, EmbedError> {
    let first = records.first().ok_or(EmbedError::EmptyCollection)?;
    let dim = first.dim();
    for r in records {
        if r.vector.is_empty() {
            return Err(EmbedError::EmptyVector(r.id.clone()));
        }
        if r.dim() != dim {
            return Err(EmbedError::RecordDimension {
                id: r.id.clone(),
                expected: dim,
                got: r.dim(),
            });
        }
        if r.vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::NonFinite(r.id.clone()));
        }
    }
    Ok(dim)
}

/// One step of a selection trace. `avg_sim` is the chosen record's average
/// similarity to everything selected before it (`None` for the seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub id: String,
    pub avg_sim: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected ids in selection order.
    pub selected_ids: Vec<String>,
    /// Positions of the selected records in the input collection.
    #[serde(skip)]
    pub selected_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceStep>>,
    /// Number of full scans over the candidate set.
    #[serde(skip)]
    pub passes: usize,
}

impl SelectionResult {
    pub(crate) fn from_indices(records: &[EmbeddingRecord], indices: Vec<usize>) -> Self {
        SelectionResult {
            selected_ids: indices.iter().map(|&i| records[i].id.clone()).collect(),
            selected_indices: indices,
            trace: None,
            passes: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.selected_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected_ids.is_empty()
    }
}
