//! Plackett-Luce ranking probability, the temperature-scaled listwise loss
//! with its analytic gradient, and pairwise win aggregation.
//!
//! Every exponential goes through a max-shifted log-sum-exp, so scores
//! divided by a small temperature do not overflow.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Permutation, ScoreVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankMathError {
    #[error("{scores} scores for a permutation of {perm}")]
    LengthMismatch { scores: usize, perm: usize },
    #[error("temperature must be positive and finite, got {0}")]
    NonPositiveTemperature(f64),
    #[error("score at position {0} is not finite (after temperature scaling)")]
    NonFiniteScore(usize),
    #[error("win matrix must be square: row {row} has {got} entries, expected {n}")]
    NotSquare { row: usize, got: usize, n: usize },
    #[error("win matrix diagonal entry {0} is not zero")]
    NonZeroDiagonal(usize),
    #[error("win matrix entry ({row}, {col}) = {value} is outside the allowed range")]
    BadEntry { row: usize, col: usize, value: f64 },
}

/// `log(exp(a) + exp(b))` without overflow.
#[inline]
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// Scores of `perm`'s candidates in rank order, divided by `tau`.
fn ranked_scaled(scores: &[f64], perm: &Permutation, tau: f64) -> Result<Vec<f64>, RankMathError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(RankMathError::NonPositiveTemperature(tau));
    }
    if scores.len() != perm.len() {
        return Err(RankMathError::LengthMismatch {
            scores: scores.len(),
            perm: perm.len(),
        });
    }
    perm.zero_based()
        .map(|c| {
            let x = scores[c] / tau;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(RankMathError::NonFiniteScore(c))
            }
        })
        .collect()
}

/// `suffix[i] = log Σ_{j ≥ i} exp(x[j])`.
fn suffix_log_sum_exp(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let mut acc = f64::NEG_INFINITY;
    for i in (0..x.len()).rev() {
        acc = log_add_exp(x[i], acc);
        out[i] = acc;
    }
    out
}

/// Log-probability of `perm` under the Plackett-Luce model with the given
/// scores.
pub fn plackett_luce_log_prob(scores: &[f64], perm: &Permutation) -> Result<f64, RankMathError> {
    let x = ranked_scaled(scores, perm, 1.0)?;
    let lse = suffix_log_sum_exp(&x);
    Ok(x.iter().zip(&lse).map(|(xi, li)| xi - li).sum())
}

/// Probability of observing `perm`: the product over ranks of the softmax of
/// the chosen candidate among those not yet placed.
pub fn plackett_luce_prob(scores: &[f64], perm: &Permutation) -> Result<f64, RankMathError> {
    plackett_luce_log_prob(scores, perm).map(libm::exp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub loss: f64,
    /// Negative log factor for each rank position, best first.
    pub per_step_terms: Vec<f64>,
    /// Gradient with respect to the scores, indexed by candidate.
    pub gradient: Option<ScoreVector>,
    pub temperature: f64,
}

/// Temperature-scaled listwise loss
/// `-Σ_i log( exp(s_π(i)/τ) / Σ_{j≥i} exp(s_π(j)/τ) )`.
pub fn listwise_loss(
    scores: &[f64],
    perm: &Permutation,
    tau: f64,
) -> Result<LossReport, RankMathError> {
    let x = ranked_scaled(scores, perm, tau)?;
    let lse = suffix_log_sum_exp(&x);
    // lse[i] >= x[i] holds exactly for log_add_exp, so every term is >= 0.
    let per_step_terms: Vec<f64> = x.iter().zip(&lse).map(|(xi, li)| li - xi).collect();
    Ok(LossReport {
        loss: per_step_terms.iter().sum(),
        per_step_terms,
        gradient: None,
        temperature: tau,
    })
}

/// Loss together with its gradient.
pub fn listwise_loss_with_grad(
    scores: &[f64],
    perm: &Permutation,
    tau: f64,
) -> Result<LossReport, RankMathError> {
    let mut report = listwise_loss(scores, perm, tau)?;
    report.gradient = Some(listwise_loss_grad(scores, perm, tau)?);
    Ok(report)
}

/// Analytic gradient of [`listwise_loss`].
///
/// For the candidate at rank `r`, `∂L/∂s = (Σ_{i≤r} softmax_i(x_r) - 1) / τ`
/// where `softmax_i` is taken over the suffix starting at rank `i`.
pub fn listwise_loss_grad(
    scores: &[f64],
    perm: &Permutation,
    tau: f64,
) -> Result<ScoreVector, RankMathError> {
    let x = ranked_scaled(scores, perm, tau)?;
    let lse = suffix_log_sum_exp(&x);
    let mut grad = vec![0.0; scores.len()];
    // prefix = log Σ_{i≤r} exp(-lse[i])
    let mut prefix = f64::NEG_INFINITY;
    for (r, cand) in perm.zero_based().enumerate() {
        prefix = log_add_exp(-lse[r], prefix);
        let weight = libm::exp(x[r] + prefix);
        grad[cand] = (weight - 1.0) / tau;
    }
    Ok(ScoreVector::new(grad).expect("finite by construction"))
}

/// Pairwise preference matrix: `get(i, j)` is the probability (or 0/1
/// indicator) that candidate `i` beats candidate `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinMatrix {
    n: usize,
    wins: Vec<f64>,
}

impl WinMatrix {
    /// Probabilistic matrix with entries in `[0, 1]` and a zero diagonal.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, RankMathError> {
        let n = rows.len();
        let mut wins = Vec::with_capacity(n * n);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(RankMathError::NotSquare {
                    row,
                    got: r.len(),
                    n,
                });
            }
            for (col, &value) in r.iter().enumerate() {
                if row == col && value != 0.0 {
                    return Err(RankMathError::NonZeroDiagonal(row));
                }
                if !(0.0..=1.0).contains(&value) {
                    return Err(RankMathError::BadEntry { row, col, value });
                }
                wins.push(value);
            }
        }
        Ok(WinMatrix { n, wins })
    }

    /// Strict matrix: entries must be exactly 0 or 1.
    pub fn strict(rows: &[Vec<f64>]) -> Result<Self, RankMathError> {
        let m = Self::from_rows(rows)?;
        if let Some(pos) = m.wins.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(RankMathError::BadEntry {
                row: pos / m.n,
                col: pos % m.n,
                value: m.wins[pos],
            });
        }
        Ok(m)
    }

    /// Builds a strict matrix from a list of `(winner, loser)` 0-based pairs.
    pub fn from_beats(n: usize, beats: &[(usize, usize)]) -> Result<Self, RankMathError> {
        let mut rows = vec![vec![0.0; n]; n];
        for &(w, l) in beats {
            if w >= n || l >= n {
                return Err(RankMathError::BadEntry {
                    row: w,
                    col: l,
                    value: 1.0,
                });
            }
            rows[w][l] = 1.0;
        }
        Self::strict(&rows)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.wins[i * self.n + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRanking {
    /// Number of opponents each candidate beats with probability above 0.5.
    pub counts: Vec<usize>,
    pub perm: Permutation,
}

/// Counts strict wins (`> 0.5`) per candidate and orders candidates by
/// descending count. The sort is stable, so ties keep the lower index first.
pub fn pairwise_rank(wins: &WinMatrix) -> PairwiseRanking {
    let n = wins.len();
    let counts: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && wins.get(i, j) > 0.5).count())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
    PairwiseRanking {
        counts,
        perm: Permutation::from_valid(order.into_iter().map(|i| i + 1).collect()),
    }
}
