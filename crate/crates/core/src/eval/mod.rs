//! IR evaluation: graded judgments, run files and ranking metrics.

mod metrics;
mod qrels;
mod trec;

use alloc::string::String;

use thiserror::Error;

pub use metrics::{
    kendall_tau, mrr, ndcg_at_k, recall_at_k, Gain, MetricResult, RecallResult,
    DEFAULT_REL_THRESHOLD,
};
pub use qrels::{validate_run, Qrels, Run, RunEntry};
pub use trec::{format_qrels, format_run, parse_qrels, parse_run};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("line {line}: malformed: {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("line {line}: {message}")]
    InvariantViolation { line: usize, message: String },
    #[error("permutations differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("rank correlation needs at least 2 items, got {0}")]
    TooShort(usize),
}
