//! Reranking against a pluggable model backend.

mod backend;
mod engine;
mod parse;
mod prompt;

use alloc::string::String;

use thiserror::Error;

pub use backend::{Backend, BackendError, MockBackend, MockPolicy};
pub use engine::{
    rerank_listwise, rerank_pairwise, DocStore, Incident, RerankOptions, RerankOutcome,
    WindowConfig,
};
pub use parse::{
    bracketed_integers, parse_ranking, parse_yes_no, render_ranking, Repair, RepairLog, Unparseable,
};
pub use prompt::{
    build_listwise_prompt, build_pairwise_prompt, PromptContext, PromptKind, PromptMode,
    PromptScript, Role, Turn,
};

use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RerankError {
    #[error("listwise prompts need at least 2 documents, got {0}")]
    TooFewDocs(usize),
    #[error("document {id} lacks {missing}")]
    MissingModality { id: String, missing: &'static str },
    #[error("document {0} not found in corpus")]
    MissingDoc(String),
    #[error("no candidates to rerank")]
    EmptyCandidates,
    #[error("invalid window: size {window_size}, stride {stride}")]
    InvalidWindow { window_size: usize, stride: usize },
    #[error("backend failed on window {window}: {source}")]
    Backend {
        window: usize,
        #[source]
        source: BackendError,
    },
    #[error("window {window}: unparseable output {raw:?}")]
    Unparseable { window: usize, raw: String },
    #[error("window {window}: output needed {} repairs in strict mode", .log.len())]
    StrictRepair { window: usize, log: RepairLog },
    #[error("prompt carries images but the backend is text-only")]
    ImagesUnsupported,
    #[error(transparent)]
    Candidates(#[from] ModelError),
}
