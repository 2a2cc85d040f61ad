//! Greedy maximum-diversity selection.
//!
//! Starting from a seed record, each step adds the candidate whose average
//! similarity to the current selection is lowest. The fast path keeps one
//! running similarity sum per candidate, so a step is a single O(N·d) pass.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::geometry::{
    cosine_from_parts, cosine_sim, dot, euclidean_dist, euclidean_unchecked, l2_norm,
};
use super::{check_collection, EmbedError, EmbeddingRecord, SelectionResult, TraceStep};

/// Largest collection the brute-force oracle accepts.
pub const ORACLE_MAX_RECORDS: usize = 32;

/// How two records are compared during selection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiversityMetric {
    /// Minimise average cosine similarity.
    #[default]
    Cosine,
    /// Maximise average Euclidean distance (similarity is the negated distance).
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiversityConfig {
    pub metric: DiversityMetric,
    /// Input position of the first selected record.
    pub seed_index: usize,
    pub trace: bool,
}

impl Default for DiversityConfig {
    fn default() -> Self {
        DiversityConfig {
            metric: DiversityMetric::Cosine,
            seed_index: 0,
            trace: false,
        }
    }
}

fn validate(
    records: &[EmbeddingRecord],
    k: usize,
    cfg: &DiversityConfig,
) -> Result<Vec<f64>, EmbedError> {
    if k == 0 {
        return Err(EmbedError::ZeroK);
    }
    check_collection(records)?;
    if cfg.seed_index >= records.len() {
        return Err(EmbedError::BadSeedIndex {
            index: cfg.seed_index,
            n: records.len(),
        });
    }
    let mut norms = Vec::with_capacity(records.len());
    for r in records {
        let n = l2_norm(&r.vector);
        if n == 0.0 && cfg.metric == DiversityMetric::Cosine {
            return Err(EmbedError::ZeroVector {
                id: Some(r.id.clone()),
            });
        }
        norms.push(n);
    }
    Ok(norms)
}

/// Index of the smallest value among unselected candidates; ties go to the
/// lowest index.
fn argmin_unselected(values: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, v) in values {
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((j, v)),
        }
    }
    best
}

fn finish(
    records: &[EmbeddingRecord],
    order: Vec<usize>,
    avgs: Vec<Option<f64>>,
    passes: usize,
    trace: bool,
) -> SelectionResult {
    let mut out = SelectionResult::from_indices(records, order);
    out.passes = passes;
    if trace {
        out.trace = Some(
            out.selected_indices
                .iter()
                .zip(avgs)
                .map(|(&i, avg_sim)| TraceStep {
                    id: records[i].id.clone(),
                    avg_sim,
                })
                .collect(),
        );
    }
    out
}

/// Greedy maximum-diversity subset of size `min(k, N)`.
///
/// Zero vectors are rejected under the cosine metric with the offending id.
pub fn greedy_diversity_select(
    records: &[EmbeddingRecord],
    k: usize,
    cfg: &DiversityConfig,
) -> Result<SelectionResult, EmbedError> {
    let norms = validate(records, k, cfg)?;
    let n = records.len();
    let k = k.min(n);

    let mut selected = vec![false; n];
    let mut sums = vec![0.0f64; n];
    let mut order = Vec::with_capacity(k);
    let mut avgs = Vec::with_capacity(k);
    let mut passes = 0;

    let mut current = cfg.seed_index;
    selected[current] = true;
    order.push(current);
    avgs.push(None);

    while order.len() < k {
        let anchor = &records[current].vector;
        let anchor_norm = norms[current];
        let size = order.len() as f64;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if selected[j] {
                continue;
            }
            let sim = match cfg.metric {
                DiversityMetric::Cosine => {
                    cosine_from_parts(dot(anchor, &records[j].vector), anchor_norm, norms[j])
                }
                DiversityMetric::Euclidean => -euclidean_unchecked(anchor, &records[j].vector),
            };
            sums[j] += sim;
            let avg = sums[j] / size;
            match best {
                Some((_, b)) if avg >= b => {}
                _ => best = Some((j, avg)),
            }
        }
        passes += 1;
        let (next, avg) = best.expect("k <= n leaves at least one candidate");
        selected[next] = true;
        order.push(next);
        avgs.push(Some(avg));
        current = next;
    }

    Ok(finish(records, order, avgs, passes, cfg.trace))
}

/// Literal replay of the greedy procedure: every step recomputes each
/// candidate's average similarity from scratch. Test oracle only, capped at
/// [`ORACLE_MAX_RECORDS`].
pub fn brute_force_diversity_oracle(
    records: &[EmbeddingRecord],
    k: usize,
    cfg: &DiversityConfig,
) -> Result<SelectionResult, EmbedError> {
    if records.len() > ORACLE_MAX_RECORDS {
        return Err(EmbedError::TooLarge {
            n: records.len(),
            max: ORACLE_MAX_RECORDS,
        });
    }
    validate(records, k, cfg)?;
    let n = records.len();
    let k = k.min(n);
    let sim = |i: usize, j: usize| -> f64 {
        let (a, b) = (&records[i].vector, &records[j].vector);
        match cfg.metric {
            DiversityMetric::Cosine => cosine_sim(a, b).expect("validated"),
            DiversityMetric::Euclidean => -euclidean_dist(a, b).expect("validated"),
        }
    };

    let mut order = vec![cfg.seed_index];
    let mut avgs = vec![None];
    let mut passes = 0;
    while order.len() < k {
        let candidates = (0..n).filter(|j| !order.contains(j)).map(|j| {
            let total = order.iter().fold(0.0, |acc, &i| acc + sim(i, j));
            (j, total / order.len() as f64)
        });
        let (next, avg) = argmin_unselected(candidates).expect("candidates remain");
        passes += 1;
        order.push(next);
        avgs.push(Some(avg));
    }
    Ok(finish(records, order, avgs, passes, cfg.trace))
}
