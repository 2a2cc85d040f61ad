//! Sliding-window listwise reranking and pairwise reranking.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use super::backend::Backend;
use super::parse::{fallback, parse_ranking, parse_yes_no, RepairLog};
use super::prompt::{
    build_listwise_prompt, build_pairwise_prompt, PromptMode, PromptScript, LISTWISE_REMINDER,
    PAIRWISE_REMINDER,
};
use super::RerankError;
use crate::model::{CandidateList, Document, Permutation, Query};
use crate::rank_math::{pairwise_rank, WinMatrix};

/// Windows are visited back to front: the first covers the tail of the list,
/// each next one starts `stride` positions earlier, and the last one always
/// starts at the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_size: usize,
    pub stride: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_size: 20,
            stride: 10,
        }
    }
}

impl WindowConfig {
    pub fn new(window_size: usize, stride: usize) -> Result<Self, RerankError> {
        let cfg = WindowConfig {
            window_size,
            stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RerankError> {
        if self.stride == 0 || self.stride > self.window_size {
            return Err(RerankError::InvalidWindow {
                window_size: self.window_size,
                stride: self.stride,
            });
        }
        Ok(())
    }

    /// Half-open position ranges in visiting order for a list of `n`.
    pub fn schedule(&self, n: usize) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        let mut end = n;
        loop {
            let start = end.saturating_sub(self.window_size);
            out.push(start..end);
            if start == 0 {
                break;
            }
            end -= self.stride;
        }
        out
    }
}

/// Lookup of documents by id.
pub trait DocStore {
    fn doc(&self, id: &str) -> Option<&Document>;
}

impl DocStore for BTreeMap<String, Document> {
    fn doc(&self, id: &str) -> Option<&Document> {
        self.get(id)
    }
}

impl<D: DocStore + ?Sized> DocStore for &D {
    fn doc(&self, id: &str) -> Option<&Document> {
        (**self).doc(id)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RerankOptions {
    pub window: WindowConfig,
    pub mode: PromptMode,
    /// Turn repairs and fallbacks into errors.
    pub strict: bool,
    /// Pairwise only: compare every ordered pair instead of asking for
    /// per-document relevance.
    pub tournament: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Incident {
    /// Output was unreadable; the request was repeated with a reminder.
    ReminderRetry { window: usize },
    /// Still unreadable after the reminder; the window kept its input order.
    FallbackToInputOrder { window: usize },
    /// Relevance answer unreadable after the reminder; counted as "No".
    UnreadableAnswer { doc_id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankOutcome {
    /// Reordered candidates with scores `n - r + 1` for rank `r`.
    pub ranked: CandidateList,
    /// The reordering relative to the input list.
    pub perm: Permutation,
    pub repairs: RepairLog,
    pub incidents: Vec<Incident>,
    pub backend_calls: usize,
}

fn resolve<'d, S: DocStore + ?Sized>(
    candidates: &CandidateList,
    docs: &'d S,
) -> Result<Vec<&'d Document>, RerankError> {
    if candidates.is_empty() {
        return Err(RerankError::EmptyCandidates);
    }
    candidates.validate()?;
    candidates
        .doc_ids
        .iter()
        .map(|id| {
            docs.doc(id)
                .ok_or_else(|| RerankError::MissingDoc(id.clone()))
        })
        .collect()
}

fn finish(
    candidates: &CandidateList,
    order: Vec<usize>,
    repairs: RepairLog,
    incidents: Vec<Incident>,
    backend_calls: usize,
) -> RerankOutcome {
    let n = order.len();
    let ranked = CandidateList {
        query_id: candidates.query_id.clone(),
        doc_ids: order
            .iter()
            .map(|&i| candidates.doc_ids[i].clone())
            .collect(),
        first_stage_scores: Some((0..n).map(|r| (n - r) as f64).collect()),
    };
    RerankOutcome {
        ranked,
        perm: Permutation::from_valid(order.into_iter().map(|i| i + 1).collect()),
        repairs,
        incidents,
        backend_calls,
    }
}

struct Session<'a, B: ?Sized> {
    backend: &'a B,
    strict: bool,
    calls: usize,
    repairs: RepairLog,
    incidents: Vec<Incident>,
}

impl<B: Backend + ?Sized> Session<'_, B> {
    fn call(&mut self, prompt: &PromptScript, window: usize) -> Result<String, RerankError> {
        if prompt.has_images() && !self.backend.supports_images() {
            return Err(RerankError::ImagesUnsupported);
        }
        self.calls += 1;
        self.backend
            .complete(prompt)
            .map_err(|source| RerankError::Backend { window, source })
    }

    fn ranking(
        &mut self,
        prompt: &PromptScript,
        m: usize,
        window: usize,
    ) -> Result<Permutation, RerankError> {
        let raw = self.call(prompt, window)?;
        let parsed = match parse_ranking(&raw, m) {
            Ok(p) => Some(p),
            Err(_) => {
                self.incidents.push(Incident::ReminderRetry { window });
                let retry = prompt.with_reminder(&raw, LISTWISE_REMINDER);
                let raw2 = self.call(&retry, window)?;
                match parse_ranking(&raw2, m) {
                    Ok(p) => Some(p),
                    Err(_) if self.strict => {
                        return Err(RerankError::Unparseable { window, raw: raw2 })
                    }
                    Err(_) => None,
                }
            }
        };
        match parsed {
            Some((perm, log)) => {
                if self.strict && !log.is_empty() {
                    return Err(RerankError::StrictRepair { window, log });
                }
                self.repairs.extend(log);
                Ok(perm)
            }
            None => {
                self.incidents
                    .push(Incident::FallbackToInputOrder { window });
                Ok(fallback(m))
            }
        }
    }

    fn relevant(&mut self, prompt: &PromptScript, doc_id: &str) -> Result<bool, RerankError> {
        let raw = self.call(prompt, 0)?;
        if let Ok(v) = parse_yes_no(&raw) {
            return Ok(v);
        }
        let retry = prompt.with_reminder(&raw, PAIRWISE_REMINDER);
        let raw2 = self.call(&retry, 0)?;
        match parse_yes_no(&raw2) {
            Ok(v) => Ok(v),
            Err(_) if self.strict => Err(RerankError::Unparseable {
                window: 0,
                raw: raw2,
            }),
            Err(_) => {
                self.incidents.push(Incident::UnreadableAnswer {
                    doc_id: doc_id.into(),
                });
                Ok(false)
            }
        }
    }
}

/// Reranks `candidates` with overlapping windows, back to front, so strong
/// candidates near the bottom can be promoted to the top. Windows of a
/// single query are strictly sequential.
pub fn rerank_listwise<S, B>(
    query: &Query,
    candidates: &CandidateList,
    docs: &S,
    backend: &B,
    opts: &RerankOptions,
) -> Result<RerankOutcome, RerankError>
where
    S: DocStore + ?Sized,
    B: Backend + ?Sized,
{
    opts.window.validate()?;
    let resolved = resolve(candidates, docs)?;
    let mut order: Vec<usize> = (0..resolved.len()).collect();
    let mut session = Session {
        backend,
        strict: opts.strict,
        calls: 0,
        repairs: RepairLog::default(),
        incidents: Vec::new(),
    };
    for (w, range) in opts.window.schedule(order.len()).into_iter().enumerate() {
        if range.len() < 2 {
            continue;
        }
        let slice = &order[range.clone()];
        let window_docs: Vec<&Document> = slice.iter().map(|&i| resolved[i]).collect();
        let prompt = build_listwise_prompt(query, &window_docs, opts.mode)?;
        let perm = session.ranking(&prompt, slice.len(), w)?;
        let reordered: Vec<usize> = perm.zero_based().map(|i| slice[i]).collect();
        order[range].copy_from_slice(&reordered);
    }
    Ok(finish(
        candidates,
        order,
        session.repairs,
        session.incidents,
        session.calls,
    ))
}

/// Pairwise reranking.
///
/// Relevance mode asks once per document and moves relevant documents ahead
/// of the rest, keeping the input order inside each group. Tournament mode
/// presents every ordered pair as a two-document listwise request, averages
/// the two presentations into a win probability, and ranks by wins.
pub fn rerank_pairwise<S, B>(
    query: &Query,
    candidates: &CandidateList,
    docs: &S,
    backend: &B,
    opts: &RerankOptions,
) -> Result<RerankOutcome, RerankError>
where
    S: DocStore + ?Sized,
    B: Backend + ?Sized,
{
    let resolved = resolve(candidates, docs)?;
    let n = resolved.len();
    let mut session = Session {
        backend,
        strict: opts.strict,
        calls: 0,
        repairs: RepairLog::default(),
        incidents: Vec::new(),
    };
    let order = if opts.tournament {
        let mut rows = vec![vec![0.0; n]; n];
        let mut window = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let forward = build_listwise_prompt(query, &[resolved[i], resolved[j]], opts.mode)?;
                let i_first = session.ranking(&forward, 2, window)?.order()[0] == 1;
                window += 1;
                let backward =
                    build_listwise_prompt(query, &[resolved[j], resolved[i]], opts.mode)?;
                let i_first_back = session.ranking(&backward, 2, window)?.order()[0] == 2;
                window += 1;
                let p = (f64::from(u8::from(i_first)) + f64::from(u8::from(i_first_back))) / 2.0;
                rows[i][j] = p;
                rows[j][i] = 1.0 - p;
            }
        }
        let wins = WinMatrix::from_rows(&rows).expect("probabilities in [0, 1]");
        pairwise_rank(&wins).perm.zero_based().collect()
    } else {
        let mut relevant = Vec::new();
        let mut rest = Vec::new();
        for (i, doc) in resolved.iter().enumerate() {
            let prompt = build_pairwise_prompt(query, doc)?;
            if session.relevant(&prompt, &doc.id)? {
                relevant.push(i);
            } else {
                rest.push(i);
            }
        }
        relevant.extend(rest);
        relevant
    };
    Ok(finish(
        candidates,
        order,
        session.repairs,
        session.incidents,
        session.calls,
    ))
}
