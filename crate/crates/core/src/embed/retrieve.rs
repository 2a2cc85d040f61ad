use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::geometry::euclidean_unchecked;
use super::{EmbedError, EmbeddingRecord};

/// A corpus position and its distance to the query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

fn by_distance_then_index(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then(a.index.cmp(&b.index))
}

/// Exact k nearest records by Euclidean distance, ascending, ties by input
/// order. Returns every record when `k >= N`.
pub fn top_k_by_distance(
    query: &[f64],
    corpus: &[EmbeddingRecord],
    k: usize,
) -> Result<Vec<Neighbor>, EmbedError> {
    if k == 0 {
        return Err(EmbedError::ZeroK);
    }
    if corpus.is_empty() {
        return Err(EmbedError::EmptyCollection);
    }
    let mut all = Vec::with_capacity(corpus.len());
    for (index, rec) in corpus.iter().enumerate() {
        if rec.vector.len() != query.len() {
            return Err(EmbedError::DimensionMismatch {
                expected: query.len(),
                got: rec.vector.len(),
            });
        }
        all.push(Neighbor {
            index,
            distance: euclidean_unchecked(query, &rec.vector),
        });
    }
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, by_distance_then_index);
        all.truncate(k);
    }
    all.sort_unstable_by(by_distance_then_index);
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_distances() {
        let corpus = [
            EmbeddingRecord::new("a", alloc::vec![1.0, 0.0]),
            EmbeddingRecord::new("b", alloc::vec![2.0, 0.0]),
            EmbeddingRecord::new("c", alloc::vec![3.0, 0.0]),
        ];
        let out = top_k_by_distance(&[0.0, 0.0], &corpus, 2).unwrap();
        assert_eq!(out.iter().map(|n| n.index).collect::<Vec<_>>(), [0, 1]);
        let exact = top_k_by_distance(&[3.0, 0.0], &corpus, 1).unwrap();
        assert_eq!(
            exact[0],
            Neighbor {
                index: 2,
                distance: 0.0
            }
        );
        assert_eq!(top_k_by_distance(&[0.0, 0.0], &corpus, 9).unwrap().len(), 3);
    }

    #[test]
    fn ties_keep_input_order() {
        let corpus = [
            EmbeddingRecord::new("a", alloc::vec![-1.0]),
            EmbeddingRecord::new("b", alloc::vec![1.0]),
            EmbeddingRecord::new("c", alloc::vec![1.0]),
        ];
        let out = top_k_by_distance(&[0.0], &corpus, 2).unwrap();
        assert_eq!(out.iter().map(|n| n.index).collect::<Vec<_>>(), [0, 1]);
    }

    #[test]
    fn errors() {
        assert_eq!(
            top_k_by_distance(&[0.0], &[], 1),
            Err(EmbedError::EmptyCollection)
        );
        let corpus = [EmbeddingRecord::new("a", alloc::vec![1.0, 2.0])];
        assert!(matches!(
            top_k_by_distance(&[0.0], &corpus, 1),
            Err(EmbedError::DimensionMismatch { .. })
        ));
    }
}
