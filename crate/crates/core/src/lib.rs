//! Listwise reranking toolkit core.
//!
//! Everything in this crate is pure computation over in-memory values and
//! builds without `std`: ranking math (Plackett-Luce probability and the
//! temperature-scaled listwise loss), embedding geometry and coreset
//! selection, listwise/pairwise prompt construction and output parsing, the
//! sliding-window rerank engine over an abstract [`rerank::Backend`], IR
//! metrics with TREC text formats, and the teacher-label distillation steps.
//!
//! File IO, the HTTP backend and the command line live in the `listrank`
//! crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod distill;
pub mod embed;
pub mod eval;
pub mod model;
pub mod rank_math;
pub mod rerank;

pub use model::{
    apply_permutation, identity_permutation, validate_permutation, CandidateList, Document,
    Modality, ModelError, Permutation, Query, ScoreVector,
};
