//! The model behind a rerank request, and deterministic test doubles.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use thiserror::Error;

use super::prompt::{PromptKind, PromptScript};
use crate::eval::Qrels;
use crate::model::{identity_permutation, Permutation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    /// Connection-level failure or timeout.
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {message}")]
    Status { status: u16, message: String },
    #[error("malformed response: {0}")]
    InvalidResponse(String),
    #[error("backend cannot handle this request: {0}")]
    Unsupported(String),
    #[error("scripted backend exhausted after {0} responses")]
    ScriptExhausted(usize),
}

impl BackendError {
    /// Transport failures, rate limits and server errors are worth retrying.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// A ranking model reachable through chat-style completions.
///
/// `complete` must return (text or error) in bounded time; callers impose
/// the deadline.
pub trait Backend {
    fn complete(&self, prompt: &PromptScript) -> Result<String, BackendError>;

    fn supports_images(&self) -> bool {
        false
    }

    fn max_candidates_hint(&self) -> Option<usize> {
        None
    }

    /// Short label recorded with produced artifacts.
    fn tag(&self) -> String;
}

macro_rules! forward_backend {
    ($($ptr:ty),*) => {$(
        impl<B: Backend + ?Sized> Backend for $ptr {
            fn complete(&self, prompt: &PromptScript) -> Result<String, BackendError> {
                (**self).complete(prompt)
            }
            fn supports_images(&self) -> bool {
                (**self).supports_images()
            }
            fn max_candidates_hint(&self) -> Option<usize> {
                (**self).max_candidates_hint()
            }
            fn tag(&self) -> String {
                (**self).tag()
            }
        }
    )*};
}

forward_backend!(&B, Box<B>, Arc<B>);

#[derive(Debug, Clone, PartialEq)]
pub enum MockPolicy {
    /// Keeps the presented order; answers "Yes" to relevance questions.
    Identity,
    /// Reverses the presented order; answers "No".
    Reverse,
    /// Sorts by judged grade descending (ties keep presented order);
    /// answers "Yes" for grade >= 1.
    Oracle(Qrels),
    /// Replays fixed responses in order.
    Scripted(Vec<String>),
}

/// Deterministic backend for tests and offline runs.
#[derive(Debug)]
pub struct MockBackend {
    policy: MockPolicy,
    cursor: AtomicUsize,
}

impl MockBackend {
    pub fn new(policy: MockPolicy) -> Self {
        MockBackend {
            policy,
            cursor: AtomicUsize::new(0),
        }
    }

    pub fn identity() -> Self {
        Self::new(MockPolicy::Identity)
    }

    pub fn reverse() -> Self {
        Self::new(MockPolicy::Reverse)
    }

    pub fn oracle(qrels: Qrels) -> Self {
        Self::new(MockPolicy::Oracle(qrels))
    }

    pub fn scripted<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self::new(MockPolicy::Scripted(
            responses.into_iter().map(Into::into).collect(),
        ))
    }

    /// Completions served so far.
    pub fn calls(&self) -> usize {
        self.cursor.load(Ordering::SeqCst)
    }

    fn ranking(&self, perm: Permutation) -> String {
        perm.to_string()
    }
}

impl Backend for MockBackend {
    fn complete(&self, prompt: &PromptScript) -> Result<String, BackendError> {
        let call = self.cursor.fetch_add(1, Ordering::SeqCst);
        let ctx = prompt.context();
        let n = ctx.doc_ids.len();
        let answer = match (&self.policy, ctx.kind) {
            (MockPolicy::Scripted(lines), _) => {
                return lines
                    .get(call)
                    .cloned()
                    .ok_or(BackendError::ScriptExhausted(lines.len()));
            }
            (MockPolicy::Identity, PromptKind::Listwise) => self.ranking(identity_permutation(n)),
            (MockPolicy::Reverse, PromptKind::Listwise) => {
                self.ranking(identity_permutation(n).reversed())
            }
            (MockPolicy::Identity, PromptKind::Pairwise) => "Yes".into(),
            (MockPolicy::Reverse, PromptKind::Pairwise) => "No".into(),
            (MockPolicy::Oracle(qrels), PromptKind::Listwise) => {
                let grade = |i: usize| qrels.grade(&ctx.query_id, &ctx.doc_ids[i]).unwrap_or(0);
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by_key(|&i| core::cmp::Reverse(grade(i)));
                order
                    .iter()
                    .map(|i| format!("[{}]", i + 1))
                    .collect::<Vec<_>>()
                    .join(" > ")
            }
            (MockPolicy::Oracle(qrels), PromptKind::Pairwise) => {
                let relevant = ctx
                    .doc_ids
                    .first()
                    .and_then(|d| qrels.grade(&ctx.query_id, d))
                    .is_some_and(|g| g >= 1);
                if relevant { "Yes" } else { "No" }.into()
            }
        };
        Ok(answer)
    }

    fn supports_images(&self) -> bool {
        true
    }

    fn tag(&self) -> String {
        match self.policy {
            MockPolicy::Identity => "mock:identity",
            MockPolicy::Reverse => "mock:reverse",
            MockPolicy::Oracle(_) => "mock:oracle",
            MockPolicy::Scripted(_) => "mock:scripted",
        }
        .to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Document, Query};
    use crate::rerank::prompt::{build_listwise_prompt, build_pairwise_prompt, PromptMode};

    fn window(ids: &[&str]) -> PromptScript {
        let docs: Vec<Document> = ids.iter().map(|id| Document::text(*id, "t")).collect();
        let refs: Vec<&Document> = docs.iter().collect();
        build_listwise_prompt(&Query::new("q1", "q"), &refs, PromptMode::Text).unwrap()
    }

    #[test]
    fn identity_and_reverse() {
        let p3 = window(&["a", "b", "c"]);
        assert_eq!(
            MockBackend::identity().complete(&p3).unwrap(),
            "[1] > [2] > [3]"
        );
        let p2 = window(&["a", "b"]);
        assert_eq!(MockBackend::reverse().complete(&p2).unwrap(), "[2] > [1]");
    }

    #[test]
    fn oracle_sorts_by_grade() {
        let mut qrels = Qrels::default();
        qrels.insert("q1", "d2", 3);
        qrels.insert("q1", "d1", 1);
        qrels.insert("q1", "d3", 0);
        let mock = MockBackend::oracle(qrels);
        assert_eq!(
            mock.complete(&window(&["d1", "d2", "d3"])).unwrap(),
            "[2] > [1] > [3]"
        );
        let q = Query::new("q1", "q");
        let yes = build_pairwise_prompt(&q, &Document::text("d1", "t")).unwrap();
        let no = build_pairwise_prompt(&q, &Document::text("d3", "t")).unwrap();
        assert_eq!(mock.complete(&yes).unwrap(), "Yes");
        assert_eq!(mock.complete(&no).unwrap(), "No");
    }

    #[test]
    fn scripted_exhaustion() {
        let mock = MockBackend::scripted(["[1] > [2]"]);
        let p = window(&["a", "b"]);
        assert_eq!(mock.complete(&p).unwrap(), "[1] > [2]");
        assert_eq!(mock.complete(&p), Err(BackendError::ScriptExhausted(1)));
    }

    #[test]
    fn retryable_classification() {
        assert!(BackendError::Transport("reset".into()).is_retryable());
        assert!(BackendError::Status {
            status: 503,
            message: String::new()
        }
        .is_retryable());
        assert!(BackendError::Status {
            status: 429,
            message: String::new()
        }
        .is_retryable());
        assert!(!BackendError::Status {
            status: 400,
            message: String::new()
        }
        .is_retryable());
        assert!(!BackendError::InvalidResponse(String::new()).is_retryable());
    }
}
