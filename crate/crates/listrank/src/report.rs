//! JSON metric reports.

use std::collections::BTreeMap;

use listrank_core::eval::{mrr, ndcg_at_k, recall_at_k, Gain, Qrels, RecallResult, Run};
use serde::Serialize;

pub const NDCG_CUTOFFS: [usize; 2] = [10, 50];
pub const RECALL_CUTOFFS: [usize; 3] = [1, 3, 5];

const AGGREGATION: &str = "micro: mean of per-query values; macro: mean over groups of the \
mean of per-query values within the group (queries without a group form their own group); \
without grouping macro equals micro";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub gain: Gain,
    pub ndcg_k: Vec<usize>,
    pub recall_k: Vec<usize>,
    pub rel_threshold: u32,
    /// Where query groups came from, or `None` when ungrouped.
    pub grouping_source: Option<String>,
    pub aggregation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub per_query: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallSummary {
    pub micro: f64,
    #[serde(rename = "macro")]
    pub macro_mean: f64,
    pub per_group: BTreeMap<String, f64>,
    pub per_query: BTreeMap<String, f64>,
    pub excluded_queries: Vec<String>,
}

impl From<RecallResult> for RecallSummary {
    fn from(r: RecallResult) -> Self {
        RecallSummary {
            micro: r.micro,
            macro_mean: r.macro_,
            per_group: r.per_group,
            per_query: r.per_query,
            excluded_queries: r.excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub config: ReportConfig,
    pub queries: usize,
    pub ndcg: BTreeMap<String, Summary>,
    pub mrr: Summary,
    pub recall: BTreeMap<String, RecallSummary>,
}

impl MetricReport {
    pub fn ndcg_mean(&self, k: usize) -> Option<f64> {
        self.ndcg.get(&format!("@{k}")).map(|s| s.mean)
    }
}

pub fn build_report(
    qrels: &Qrels,
    run: &Run,
    gain: Gain,
    rel_threshold: u32,
    grouping_source: Option<String>,
) -> MetricReport {
    let ndcg = NDCG_CUTOFFS
        .iter()
        .map(|&k| {
            let r = ndcg_at_k(qrels, run, k, gain);
            (
                format!("@{k}"),
                Summary {
                    mean: r.mean,
                    per_query: r.per_query,
                },
            )
        })
        .collect();
    let m = mrr(qrels, run, rel_threshold);
    let recall = RECALL_CUTOFFS
        .iter()
        .map(|&k| {
            (
                format!("@{k}"),
                recall_at_k(qrels, run, k, rel_threshold).into(),
            )
        })
        .collect();
    MetricReport {
        config: ReportConfig {
            gain,
            ndcg_k: NDCG_CUTOFFS.to_vec(),
            recall_k: RECALL_CUTOFFS.to_vec(),
            rel_threshold,
            grouping_source,
            aggregation: AGGREGATION.into(),
        },
        queries: qrels.num_queries(),
        ndcg,
        mrr: Summary {
            mean: m.mean,
            per_query: m.per_query,
        },
        recall,
    }
}
