//! nDCG, MRR, Recall and Kendall tau.
//!
//! Per-query values are folded in query-id order, so means are
//! deterministic. Only queries present in the judgments are evaluated;
//! queries absent from the run score zero.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{EvalError, Qrels, Run};
use crate::model::Permutation;

/// Grades at or above this count as relevant for MRR and Recall.
pub const DEFAULT_REL_THRESHOLD: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gain {
    /// `g(rel) = rel`
    #[default]
    Linear,
    /// `g(rel) = 2^rel - 1`
    Exponential,
}

impl Gain {
    fn apply(self, grade: u32) -> f64 {
        match self {
            Gain::Linear => f64::from(grade),
            Gain::Exponential => libm::exp2(f64::from(grade)) - 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub per_query: BTreeMap<String, f64>,
    pub mean: f64,
}

impl MetricResult {
    fn from_per_query(per_query: BTreeMap<String, f64>) -> Self {
        let mean = mean(per_query.values().copied());
        MetricResult { per_query, mean }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn discount(rank: usize) -> f64 {
    libm::log2(rank as f64 + 1.0)
}

/// nDCG@k. The ideal ordering sorts the query's judged grades descending;
/// queries whose grades sum to zero score 0.
pub fn ndcg_at_k(qrels: &Qrels, run: &Run, k: usize, gain: Gain) -> MetricResult {
    let per_query = qrels
        .queries()
        .map(|(qid, judged)| {
            let dcg: f64 = run
                .ranking(qid)
                .iter()
                .take(k)
                .enumerate()
                .map(|(r, doc)| gain.apply(judged.get(doc).copied().unwrap_or(0)) / discount(r + 1))
                .sum();
            let mut ideal: Vec<u32> = judged.values().copied().collect();
            ideal.sort_unstable_by(|a, b| b.cmp(a));
            let idcg: f64 = ideal
                .iter()
                .take(k)
                .enumerate()
                .map(|(r, &g)| gain.apply(g) / discount(r + 1))
                .sum();
            let value = if idcg > 0.0 { dcg / idcg } else { 0.0 };
            (qid.into(), value)
        })
        .collect();
    MetricResult::from_per_query(per_query)
}

/// Reciprocal rank of the first document graded `>= rel_threshold`.
pub fn mrr(qrels: &Qrels, run: &Run, rel_threshold: u32) -> MetricResult {
    let per_query = qrels
        .queries()
        .map(|(qid, judged)| {
            let rr = run
                .ranking(qid)
                .iter()
                .position(|d| judged.get(d).is_some_and(|&g| g >= rel_threshold))
                .map_or(0.0, |p| 1.0 / (p + 1) as f64);
            (qid.into(), rr)
        })
        .collect();
    MetricResult::from_per_query(per_query)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecallResult {
    pub per_query: BTreeMap<String, f64>,
    /// Unweighted mean over evaluated queries.
    pub micro: f64,
    /// Mean over groups of the per-group query means. Ungrouped queries form
    /// their own singleton group; equals `micro` when no grouping exists.
    pub macro_: f64,
    pub per_group: BTreeMap<String, f64>,
    /// Queries with no relevant document, left out of both averages.
    pub excluded: Vec<String>,
}

/// Recall@k with micro and macro aggregation.
pub fn recall_at_k(qrels: &Qrels, run: &Run, k: usize, rel_threshold: u32) -> RecallResult {
    let mut out = RecallResult::default();
    for (qid, judged) in qrels.queries() {
        let relevant = judged.values().filter(|&&g| g >= rel_threshold).count();
        if relevant == 0 {
            out.excluded.push(qid.into());
            continue;
        }
        let hits = run
            .ranking(qid)
            .iter()
            .take(k)
            .filter(|d| judged.get(*d).is_some_and(|&g| g >= rel_threshold))
            .count();
        out.per_query
            .insert(qid.into(), hits as f64 / relevant as f64);
    }
    out.micro = mean(out.per_query.values().copied());
    if qrels.has_groups() {
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (qid, &v) in &out.per_query {
            let key = qrels.group(qid).unwrap_or(qid);
            groups.entry(key.into()).or_default().push(v);
        }
        out.per_group = groups
            .into_iter()
            .map(|(g, vals)| (g, mean(vals.into_iter())))
            .collect();
        out.macro_ = mean(out.per_group.values().copied());
    } else {
        out.macro_ = out.micro;
    }
    out
}

/// Kendall rank correlation between two orderings of the same items:
/// `(concordant - discordant) / (n(n-1)/2)`.
pub fn kendall_tau(a: &Permutation, b: &Permutation) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(EvalError::TooShort(n));
    }
    let (ra, rb) = (a.ranks(), b.ranks());
    let mut score: i64 = 0;
    for x in 0..n {
        for y in (x + 1)..n {
            let sa = ra[x] < ra[y];
            let sb = rb[x] < rb[y];
            score += if sa == sb { 1 } else { -1 };
        }
    }
    Ok(score as f64 / (n * (n - 1) / 2) as f64)
}
