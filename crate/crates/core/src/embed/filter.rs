use alloc::vec::Vec;

use super::geometry::cosine_sim;
use super::EmbedError;

/// Cosine floor used when no threshold is configured.
pub const DEFAULT_QUALITY_THRESHOLD: f64 = 0.25;

/// A query/document embedding pair with an arbitrary payload.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityPair<'a, P> {
    pub query: &'a [f64],
    pub doc: &'a [f64],
    pub payload: P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport<'a, P> {
    pub threshold: f64,
    /// Surviving pairs in input order.
    pub kept: Vec<QualityPair<'a, P>>,
    /// Similarity of each kept pair, aligned with `kept`.
    pub sims: Vec<f64>,
    pub dropped_below: usize,
    pub dropped_zero: usize,
}

impl<P> FilterReport<'_, P> {
    pub fn dropped(&self) -> usize {
        self.dropped_below + self.dropped_zero
    }
}

/// Keeps the pairs whose cosine similarity is at least `threshold`.
///
/// Pairs containing a zero vector are dropped and counted; a dimension
/// mismatch aborts.
pub fn quality_filter<'a, P>(
    pairs: impl IntoIterator<Item = QualityPair<'a, P>>,
    threshold: f64,
) -> Result<FilterReport<'a, P>, EmbedError> {
    let mut report = FilterReport {
        threshold,
        kept: Vec::new(),
        sims: Vec::new(),
        dropped_below: 0,
        dropped_zero: 0,
    };
    for pair in pairs {
        match cosine_sim(pair.query, pair.doc) {
            Ok(sim) if sim >= threshold => {
                report.kept.push(pair);
                report.sims.push(sim);
            }
            Ok(_) => report.dropped_below += 1,
            Err(EmbedError::ZeroVector { .. }) => report.dropped_zero += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}
