//! Training-data curation and teacher-label distillation.
//!
//! Curation pairs every query with its nearest document, drops weak pairs by
//! cosine similarity and keeps a maximally diverse subset. Distillation
//! retrieves the top-k documents per query, asks a teacher backend for a
//! ranking, and scores each label's confidence.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{
    check_collection, greedy_diversity_select, quality_filter, top_k_by_distance, DiversityConfig,
    DiversityMetric, EmbedError, EmbeddingRecord, QualityPair, SelectionResult,
    DEFAULT_QUALITY_THRESHOLD,
};
use crate::eval::kendall_tau;
use crate::model::{identity_permutation, CandidateList, Permutation, Query};
use crate::rerank::{
    rerank_listwise, Backend, DocStore, Incident, PromptMode, RerankError, RerankOptions,
    WindowConfig,
};

/// Penalty per repaired token or re-asked window.
pub const REPAIR_PENALTY: f64 = 0.1;

/// Human-readable statement of [`confidence_score`], written into output
/// manifests.
pub const CONFIDENCE_FORMULA: &str =
    "clamp(kendall_tau(teacher_perm, retrieval_order) - 0.1 * repair_count, -1, 1); tau = 1 for lists shorter than 2";

pub const DEFAULT_TEXT_BUDGET: usize = 4_000;
pub const DEFAULT_IMAGE_BUDGET: usize = 2_100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistillError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no embedding for query {0}")]
    MissingQueryEmbedding(String),
    #[error("teacher output unreadable for query {query_id} (window {window})")]
    TeacherUnreadable { query_id: String, window: usize },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Rerank(#[from] RerankError),
}

impl DistillError {
    /// Errors that stop the whole run rather than a single query.
    pub fn is_fatal(&self) -> bool {
        matches!(self, DistillError::Config(_))
    }
}

/// One distilled training sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherLabel {
    pub query_id: String,
    /// Candidates in retrieval order, as presented to the teacher.
    pub candidate_ids: Vec<String>,
    pub teacher_perm: Permutation,
    pub confidence: f64,
    pub repair_count: usize,
    pub backend_tag: String,
}

fn default_top_k() -> usize {
    20
}
fn default_selection_k() -> usize {
    DEFAULT_IMAGE_BUDGET
}
fn default_threshold() -> f64 {
    DEFAULT_QUALITY_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_selection_k")]
    pub selection_k: usize,
    #[serde(default = "default_threshold")]
    pub quality_threshold: f64,
    pub window: WindowConfig,
    /// Labels kept by confidence filtering; defaults by prompt mode.
    pub budget: Option<usize>,
    pub seed: u64,
    pub mode: PromptMode,
    pub metric: DiversityMetric,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            top_k: default_top_k(),
            selection_k: default_selection_k(),
            quality_threshold: default_threshold(),
            window: WindowConfig::default(),
            budget: None,
            seed: 0,
            mode: PromptMode::Text,
            metric: DiversityMetric::Cosine,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), DistillError> {
        let bad = |m: &str| Err(DistillError::Config(m.into()));
        if self.top_k == 0 || self.selection_k == 0 || self.budget == Some(0) {
            return bad("top_k, selection_k and budget must be at least 1");
        }
        if !(-1.0..=1.0).contains(&self.quality_threshold) {
            return bad("quality_threshold must lie in [-1, 1]");
        }
        self.window
            .validate()
            .map_err(|e| DistillError::Config(e.to_string()))
    }

    pub fn effective_budget(&self) -> usize {
        self.budget.unwrap_or(match self.mode {
            PromptMode::Text => DEFAULT_TEXT_BUDGET,
            PromptMode::Multimodal => DEFAULT_IMAGE_BUDGET,
        })
    }
}

/// Agreement between the teacher ranking and retrieval order, minus a
/// penalty per repair, clamped to `[-1, 1]`.
pub fn confidence_score(label: &TeacherLabel) -> f64 {
    let n = label.teacher_perm.len();
    let tau = kendall_tau(&label.teacher_perm, &identity_permutation(n)).unwrap_or(1.0);
    (tau - REPAIR_PENALTY * label.repair_count as f64).clamp(-1.0, 1.0)
}

/// The `budget` most confident labels, ties broken by query id.
pub fn confidence_filter(mut labels: Vec<TeacherLabel>, budget: usize) -> Vec<TeacherLabel> {
    labels.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| a.query_id.cmp(&b.query_id))
    });
    labels.truncate(budget);
    labels
}

/// Produces teacher labels one query at a time against a fixed corpus.
pub struct Distiller<'a, S: ?Sized, B: ?Sized> {
    corpus_embs: &'a [EmbeddingRecord],
    docs: &'a S,
    backend: &'a B,
    cfg: &'a PipelineConfig,
}

impl<'a, S, B> Distiller<'a, S, B>
where
    S: DocStore + ?Sized,
    B: Backend + ?Sized,
{
    pub fn new(
        corpus_embs: &'a [EmbeddingRecord],
        docs: &'a S,
        backend: &'a B,
        cfg: &'a PipelineConfig,
    ) -> Result<Self, DistillError> {
        cfg.validate()?;
        check_collection(corpus_embs).map_err(|e| DistillError::Config(e.to_string()))?;
        Ok(Distiller {
            corpus_embs,
            docs,
            backend,
            cfg,
        })
    }

    /// Retrieves, asks the teacher and scores one query. A window whose
    /// output stays unreadable after the reminder fails the query.
    pub fn label(&self, query: &Query, query_emb: &[f64]) -> Result<TeacherLabel, DistillError> {
        let hits = top_k_by_distance(query_emb, self.corpus_embs, self.cfg.top_k)?;
        let candidate_ids: Vec<String> = hits
            .iter()
            .map(|h| self.corpus_embs[h.index].id.clone())
            .collect();
        let candidates = CandidateList::new(query.id.clone(), candidate_ids);
        let opts = RerankOptions {
            window: self.cfg.window,
            mode: self.cfg.mode,
            strict: false,
            tournament: false,
        };
        let outcome = rerank_listwise(query, &candidates, self.docs, self.backend, &opts)?;
        let mut retried = 0;
        for incident in &outcome.incidents {
            match incident {
                Incident::FallbackToInputOrder { window } => {
                    return Err(DistillError::TeacherUnreadable {
                        query_id: query.id.clone(),
                        window: *window,
                    })
                }
                Incident::ReminderRetry { .. } => retried += 1,
                Incident::UnreadableAnswer { .. } => {}
            }
        }
        let mut label = TeacherLabel {
            query_id: query.id.clone(),
            candidate_ids: candidates.doc_ids,
            teacher_perm: outcome.perm,
            confidence: 0.0,
            repair_count: outcome.repairs.len() + retried,
            backend_tag: self.backend.tag(),
        };
        label.confidence = confidence_score(&label);
        Ok(label)
    }
}

/// Labels every query in order. Per-query failures are yielded, never
/// raised; look queries up in `query_embs` by id.
pub fn distill<'a, S, B>(
    queries: &'a [Query],
    query_embs: &'a [EmbeddingRecord],
    distiller: &'a Distiller<'a, S, B>,
) -> impl Iterator<Item = (&'a Query, Result<TeacherLabel, DistillError>)> + 'a
where
    S: DocStore + ?Sized,
    B: Backend + ?Sized,
{
    queries.iter().map(move |q| {
        let result = query_embs
            .iter()
            .find(|r| r.id == q.id)
            .ok_or_else(|| DistillError::MissingQueryEmbedding(q.id.clone()))
            .and_then(|emb| distiller.label(q, &emb.vector));
        (q, result)
    })
}

/// A query paired with its nearest document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuratedPair {
    pub query_id: String,
    pub doc_id: String,
    pub similarity: f64,
}

/// Stage counts and settings of one curation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationManifest {
    pub corpus_size: usize,
    pub queries: usize,
    pub pairs_kept: usize,
    pub dropped_below_threshold: usize,
    pub dropped_zero_vector: usize,
    pub selected: usize,
    pub quality_threshold: Option<f64>,
    pub selection_k: usize,
    pub metric: DiversityMetric,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curation {
    /// Selected ids: query ids when queries were given, else corpus ids.
    pub selection: SelectionResult,
    pub pairs: Vec<CuratedPair>,
    pub manifest: CurationManifest,
}

/// Quality filtering followed by diversity selection.
///
/// With queries, each query is paired with its Euclidean-nearest document,
/// pairs below the cosine threshold are dropped, and the survivors (keyed
/// by query id, represented by their document's embedding) go into greedy
/// selection. Without queries the corpus is selected from directly.
pub fn curate(
    corpus_embs: &[EmbeddingRecord],
    query_embs: Option<&[EmbeddingRecord]>,
    cfg: &PipelineConfig,
) -> Result<Curation, DistillError> {
    cfg.validate()?;
    check_collection(corpus_embs)?;
    let div = DiversityConfig {
        metric: cfg.metric,
        seed_index: 0,
        trace: true,
    };
    let mut manifest = CurationManifest {
        corpus_size: corpus_embs.len(),
        queries: 0,
        pairs_kept: 0,
        dropped_below_threshold: 0,
        dropped_zero_vector: 0,
        selected: 0,
        quality_threshold: None,
        selection_k: cfg.selection_k,
        metric: cfg.metric,
        seed: cfg.seed,
    };
    let Some(queries) = query_embs else {
        let selection = greedy_diversity_select(corpus_embs, cfg.selection_k, &div)?;
        manifest.selected = selection.len();
        return Ok(Curation {
            selection,
            pairs: Vec::new(),
            manifest,
        });
    };

    manifest.queries = queries.len();
    manifest.quality_threshold = Some(cfg.quality_threshold);
    let mut pairs = Vec::with_capacity(queries.len());
    for q in queries {
        let nearest = top_k_by_distance(&q.vector, corpus_embs, 1)?[0].index;
        pairs.push(QualityPair {
            query: &q.vector[..],
            doc: &corpus_embs[nearest].vector[..],
            payload: (q.id.as_str(), nearest),
        });
    }
    let report = quality_filter(pairs, cfg.quality_threshold)?;
    manifest.pairs_kept = report.kept.len();
    manifest.dropped_below_threshold = report.dropped_below;
    manifest.dropped_zero_vector = report.dropped_zero;

    let kept: Vec<CuratedPair> = report
        .kept
        .iter()
        .zip(&report.sims)
        .map(|(p, &similarity)| CuratedPair {
            query_id: p.payload.0.into(),
            doc_id: corpus_embs[p.payload.1].id.clone(),
            similarity,
        })
        .collect();
    if kept.is_empty() {
        return Err(EmbedError::EmptyCollection.into());
    }
    let samples: Vec<EmbeddingRecord> = report
        .kept
        .iter()
        .map(|p| EmbeddingRecord::new(p.payload.0, p.doc.to_vec()))
        .collect();
    let selection = greedy_diversity_select(&samples, cfg.selection_k, &div)?;
    manifest.selected = selection.len();
    Ok(Curation {
        selection,
        pairs: kept,
        manifest,
    })
}
