//! Exponential backoff around any backend.

use std::time::Duration;

use listrank_core::rerank::{Backend, BackendError, PromptScript};
use log::warn;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub base_delay: Duration,
    pub factor: f64,
    /// Total attempts, including the first.
    pub max_attempts: u32,
    /// Scale each delay by a uniform factor in `[0.5, 1.0)`.
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            base_delay: Duration::from_secs(1),
            factor: 2.0,
            max_attempts: 5,
            jitter: true,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based), without jitter.
    pub fn nominal_delay(&self, retry: u32) -> Duration {
        self.base_delay
            .mul_f64(self.factor.powi(retry.saturating_sub(1) as i32))
    }
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

/// Retries retryable failures of the wrapped backend; anything else is
/// returned immediately.
pub struct RetryBackend<B> {
    inner: B,
    policy: RetryPolicy,
    sleep: Sleeper,
}

impl<B: Backend> RetryBackend<B> {
    pub fn new(inner: B, policy: RetryPolicy) -> Self {
        Self::with_sleeper(inner, policy, std::thread::sleep)
    }

    pub fn with_sleeper(
        inner: B,
        policy: RetryPolicy,
        sleep: impl Fn(Duration) + Send + Sync + 'static,
    ) -> Self {
        RetryBackend {
            inner,
            policy,
            sleep: Box::new(sleep),
        }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: Backend> Backend for RetryBackend<B> {
    fn complete(&self, prompt: &PromptScript) -> Result<String, BackendError> {
        let mut attempt = 1;
        loop {
            match self.inner.complete(prompt) {
                Err(e) if e.is_retryable() && attempt < self.policy.max_attempts => {
                    let mut delay = self.policy.nominal_delay(attempt);
                    if self.policy.jitter {
                        delay = delay.mul_f64(rand::thread_rng().gen_range(0.5..1.0));
                    }
                    warn!("attempt {attempt} failed ({e}); retrying in {delay:?}");
                    (self.sleep)(delay);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn supports_images(&self) -> bool {
        self.inner.supports_images()
    }

    fn max_candidates_hint(&self) -> Option<usize> {
        self.inner.max_candidates_hint()
    }

    fn tag(&self) -> String {
        self.inner.tag()
    }
}
