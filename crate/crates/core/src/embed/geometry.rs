use super::EmbedError;

const LANES: usize = 4;

/// Dot product with a fixed four-lane reduction order.
///
/// Both slices must have the same length; callers check dimensions.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn l2_norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[inline]
pub(crate) fn cosine_from_parts(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    (dot / (norm_a * norm_b)).clamp(-1.0, 1.0)
}

fn same_dim(a: &[f64], b: &[f64]) -> Result<(), EmbedError> {
    if a.len() != b.len() {
        return Err(EmbedError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Cosine similarity `a·b / (‖a‖‖b‖)`, clamped to `[-1, 1]`.
pub fn cosine_sim(a: &[f64], b: &[f64]) -> Result<f64, EmbedError> {
    same_dim(a, b)?;
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::ZeroVector { id: None });
    }
    Ok(cosine_from_parts(dot(a, b), na, nb))
}

/// Euclidean distance `‖a - b‖₂`.
pub fn euclidean_dist(a: &[f64], b: &[f64]) -> Result<f64, EmbedError> {
    same_dim(a, b)?;
    Ok(euclidean_unchecked(a, b))
}

#[inline]
pub(crate) fn euclidean_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        let d = x - y;
        tail += d * d;
    }
    libm::sqrt((acc[0] + acc[1]) + (acc[2] + acc[3]) + tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_sim(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine_sim(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        // 11 / (sqrt(5) * 5)
        let expected = 0.983_869_910_099_907_4;
        assert!((cosine_sim(&[1.0, 2.0], &[3.0, 4.0]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_sim(&[1.0], &[1.0, 2.0]),
            Err(EmbedError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            cosine_sim(&[0.0, 0.0], &[1.0, 2.0]),
            Err(EmbedError::ZeroVector { .. })
        ));
    }

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_dist(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(euclidean_dist(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(
            euclidean_dist(&[1.0, 2.0, 3.0], &[4.0, 6.0, 3.0]).unwrap(),
            5.0
        );
        assert!(euclidean_dist(&[1.0], &[]).is_err());
    }

    #[test]
    fn dot_handles_remainder_lanes() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let b = [7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(dot(&a, &b), 84.0);
    }
}
