//! Baseline selectors used to compare against diversity selection.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::geometry::euclidean_unchecked;
use super::{check_collection, EmbedError, EmbeddingRecord, SelectionResult};

pub const KMEANS_DEFAULT_ITERS: usize = 50;

fn check_k(records: &[EmbeddingRecord], k: usize) -> Result<usize, EmbedError> {
    if k == 0 {
        return Err(EmbedError::ZeroK);
    }
    let dim = check_collection(records)?;
    if k > records.len() {
        return Err(EmbedError::KTooLarge {
            k,
            n: records.len(),
        });
    }
    Ok(dim)
}

/// Uniform sample of `k` records without replacement, in draw order.
pub fn random_select(
    records: &[EmbeddingRecord],
    k: usize,
    seed: u64,
) -> Result<SelectionResult, EmbedError> {
    check_k(records, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, records.len(), k).into_vec();
    Ok(SelectionResult::from_indices(records, picked))
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = euclidean_unchecked(point, centroid);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Lloyd's k-means from `k` seeded distinct records, then one representative
/// per cluster: the member closest to the centroid (ties by lowest index).
///
/// Representatives are emitted in cluster order.
pub fn kmeans_centroid_select(
    records: &[EmbeddingRecord],
    k: usize,
    seed: u64,
    iters: usize,
) -> Result<SelectionResult, EmbedError> {
    let dim = check_k(records, k)?;
    let n = records.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = index::sample(&mut rng, n, k)
        .into_iter()
        .map(|i| records[i].vector.clone())
        .collect();

    let mut assign: Vec<usize> = records
        .iter()
        .map(|r| nearest(&r.vector, &centroids))
        .collect();
    let mut rounds = 0;
    while rounds < iters {
        rounds += 1;
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (r, &c) in records.iter().zip(&assign) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(&r.vector) {
                *s += x;
            }
        }
        // Empty clusters take over the point farthest from its own centroid.
        let mut stolen = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                centroids[c] = sums[c].iter().map(|s| s * inv).collect();
                continue;
            }
            let far = (0..n)
                .filter(|&i| !stolen[i])
                .map(|i| {
                    (
                        i,
                        euclidean_unchecked(&records[i].vector, &centroids[assign[i]]),
                    )
                })
                .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                    Some((_, bd)) if d <= bd => best,
                    _ => Some((i, d)),
                });
            if let Some((i, _)) = far {
                stolen[i] = true;
                centroids[c] = records[i].vector.clone();
            }
        }
        let next: Vec<usize> = records
            .iter()
            .map(|r| nearest(&r.vector, &centroids))
            .collect();
        let converged = next == assign;
        assign = next;
        if converged {
            break;
        }
    }

    let mut used = vec![false; n];
    let mut picks = Vec::with_capacity(k);
    for (c, centroid) in centroids.iter().enumerate() {
        let closest = |member: &dyn Fn(usize) -> bool| {
            (0..n)
                .filter(|&i| member(i))
                .map(|i| (i, euclidean_unchecked(&records[i].vector, centroid)))
                .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                    Some((_, bd)) if d >= bd => best,
                    _ => Some((i, d)),
                })
        };
        let pick = closest(&|i| assign[i] == c && !used[i]).or_else(|| closest(&|i| !used[i]));
        if let Some((i, _)) = pick {
            used[i] = true;
            picks.push(i);
        }
    }
    let mut out = SelectionResult::from_indices(records, picks);
    out.passes = rounds;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::String;

    fn grid(n: usize) -> Vec<EmbeddingRecord> {
        (0..n)
            .map(|i| EmbeddingRecord::new(format!("r{i}"), vec![i as f64, (i * i) as f64]))
            .collect()
    }

    fn sorted(ids: &[String]) -> Vec<String> {
        let mut v = ids.to_vec();
        v.sort();
        v
    }

    #[test]
    fn random_k_equals_n_returns_everything() {
        let recs = grid(7);
        let out = random_select(&recs, 7, 42).unwrap();
        assert_eq!(
            sorted(&out.selected_ids),
            sorted(&recs.iter().map(|r| r.id.clone()).collect::<Vec<_>>())
        );
        assert_eq!(out, random_select(&recs, 7, 42).unwrap());
    }

    #[test]
    fn random_is_seed_reproducible() {
        let recs = grid(50);
        let a = random_select(&recs, 10, 7).unwrap();
        let b = random_select(&recs, 10, 7).unwrap();
        let c = random_select(&recs, 10, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.selected_ids, c.selected_ids);
    }

    #[test]
    fn kmeans_k_equals_n_is_degenerate() {
        let recs = grid(6);
        let out = kmeans_centroid_select(&recs, 6, 3, KMEANS_DEFAULT_ITERS).unwrap();
        assert_eq!(out.len(), 6);
        assert_eq!(sorted(&out.selected_ids).len(), 6);
        let mut idx = out.selected_indices.clone();
        idx.sort();
        idx.dedup();
        assert_eq!(idx.len(), 6);
    }

    #[test]
    fn kmeans_with_duplicates_still_returns_k_distinct() {
        let recs: Vec<_> = (0..5)
            .map(|i| EmbeddingRecord::new(format!("d{i}"), vec![1.0, 1.0]))
            .collect();
        let out = kmeans_centroid_select(&recs, 4, 0, 10).unwrap();
        let mut idx = out.selected_indices.clone();
        idx.sort();
        idx.dedup();
        assert_eq!(idx.len(), 4);
    }

    #[test]
    fn errors() {
        let recs = grid(3);
        assert_eq!(
            random_select(&recs, 4, 0),
            Err(EmbedError::KTooLarge { k: 4, n: 3 })
        );
        assert_eq!(
            kmeans_centroid_select(&[], 1, 0, 5),
            Err(EmbedError::EmptyCollection)
        );
        assert_eq!(random_select(&recs, 0, 0), Err(EmbedError::ZeroK));
    }
}
