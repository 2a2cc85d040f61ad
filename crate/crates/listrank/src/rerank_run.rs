//! Reranking a whole TREC run.

use std::collections::BTreeMap;

use listrank_core::eval::RunEntry;
use listrank_core::rerank::{rerank_listwise, rerank_pairwise, Backend, DocStore, RerankOptions};
use listrank_core::{CandidateList, Query};
use serde::Serialize;

use crate::par::ordered_parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Listwise,
    Pairwise,
}

#[derive(Debug, Clone)]
pub struct RerankJob {
    pub strategy: Strategy,
    pub options: RerankOptions,
    /// Rerank only the first `depth` entries of each query.
    pub depth: Option<usize>,
    pub tag: String,
    pub parallelism: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RerankSummary {
    pub queries: usize,
    pub reranked: usize,
    pub backend_calls: usize,
    pub repairs: usize,
    pub incidents: usize,
    pub failures: Vec<(String, String)>,
}

/// Splits a run into per-query lists in first-appearance order, each sorted
/// by rank.
pub fn group_run(entries: &[RunEntry]) -> Vec<(String, Vec<RunEntry>)> {
    let mut index = BTreeMap::new();
    let mut groups: Vec<(String, Vec<RunEntry>)> = Vec::new();
    for e in entries {
        let slot = *index.entry(e.query_id.clone()).or_insert_with(|| {
            groups.push((e.query_id.clone(), Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(e.clone());
    }
    for (_, list) in &mut groups {
        list.sort_by_key(|e| e.rank);
    }
    groups
}

fn rerank_query<S, B>(
    query: Option<&Query>,
    list: &[RunEntry],
    docs: &S,
    backend: &B,
    job: &RerankJob,
) -> Result<(Vec<String>, usize, usize, usize), String>
where
    S: DocStore + ?Sized,
    B: Backend + ?Sized,
{
    let query = query.ok_or("query text not found")?;
    let depth = job.depth.unwrap_or(list.len()).min(list.len());
    let head = CandidateList::new(
        query.id.clone(),
        list[..depth].iter().map(|e| e.doc_id.clone()).collect(),
    );
    let outcome = match job.strategy {
        Strategy::Listwise => rerank_listwise(query, &head, docs, backend, &job.options),
        Strategy::Pairwise => rerank_pairwise(query, &head, docs, backend, &job.options),
    }
    .map_err(|e| e.to_string())?;
    let mut ids = outcome.ranked.doc_ids;
    ids.extend(list[depth..].iter().map(|e| e.doc_id.clone()));
    Ok((
        ids,
        outcome.backend_calls,
        outcome.repairs.len(),
        outcome.incidents.len(),
    ))
}

/// Reranks every query of `entries`. A query that fails keeps its input
/// entries unchanged and is listed in the summary.
pub fn rerank_run<S, B>(
    entries: &[RunEntry],
    queries: &BTreeMap<String, Query>,
    docs: &S,
    backend: &B,
    job: &RerankJob,
) -> (Vec<RunEntry>, RerankSummary)
where
    S: DocStore + Sync + ?Sized,
    B: Backend + Sync + ?Sized,
{
    let groups = group_run(entries);
    let mut summary = RerankSummary {
        queries: groups.len(),
        ..RerankSummary::default()
    };
    let mut out = Vec::with_capacity(entries.len());
    let work = |(qid, list): &(String, Vec<RunEntry>)| {
        rerank_query(queries.get(qid), list, docs, backend, job)
    };
    let never: Result<(), std::convert::Infallible> =
        ordered_parallel(&groups, job.parallelism, work, |i, result| {
            let (qid, list) = &groups[i];
            match result {
                Ok((ids, calls, repairs, incidents)) => {
                    let n = ids.len();
                    out.extend(ids.into_iter().enumerate().map(|(r, doc_id)| RunEntry {
                        query_id: qid.clone(),
                        doc_id,
                        rank: r + 1,
                        score: (n - r) as f64,
                        tag: job.tag.clone(),
                    }));
                    summary.reranked += 1;
                    summary.backend_calls += calls;
                    summary.repairs += repairs;
                    summary.incidents += incidents;
                }
                Err(e) => {
                    log::warn!("query {qid}: {e}; keeping input order");
                    out.extend(list.iter().cloned());
                    summary.failures.push((qid.clone(), e));
                }
            }
            Ok(())
        });
    let Ok(()) = never;
    (out, summary)
}
