//! File formats, the HTTP backend and pipeline runners around
//! `listrank-core`.

pub mod config;
pub mod distill_run;
pub mod http;
pub mod io;
pub mod par;
pub mod report;
pub mod rerank_run;
pub mod retry;

pub use listrank_core as core;
