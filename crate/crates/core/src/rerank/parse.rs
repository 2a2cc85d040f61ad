//! Parsing and repair of model ranking output.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::model::{identity_permutation, Permutation};

/// One correction applied while turning raw output into a permutation.
/// Positions count bracketed tokens from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Repair {
    OutOfRange { value: u64, position: usize },
    Duplicate { index: usize, position: usize },
    Missing { index: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RepairLog(pub Vec<Repair>);

impl RepairLog {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Repair> {
        self.0.iter()
    }

    pub fn extend(&mut self, other: RepairLog) {
        self.0.extend(other.0);
    }
}

/// No bracketed integer (or no yes/no token) in the raw text.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unparseable model output: {0:?}")]
pub struct Unparseable(pub String);

/// Bracketed unsigned integers (`[12]`, `[ 3 ]`) in order of appearance.
/// Values too large for `u64` saturate.
pub fn bracketed_integers(raw: &str) -> Vec<u64> {
    let bytes = raw.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'[' {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < bytes.len() && bytes[j] == b' ' {
            j += 1;
        }
        let digits_start = j;
        let mut value: u64 = 0;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            value = value
                .saturating_mul(10)
                .saturating_add(u64::from(bytes[j] - b'0'));
            j += 1;
        }
        let has_digits = j > digits_start;
        while j < bytes.len() && bytes[j] == b' ' {
            j += 1;
        }
        if has_digits && j < bytes.len() && bytes[j] == b']' {
            out.push(value);
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Turns `"[2] > [1] > [3]"`-style output into a permutation of `1..=n`.
///
/// Out-of-range ids are dropped, only the first occurrence of a repeated id
/// is kept, and ids never mentioned are appended in ascending order. Every
/// correction is logged. Fails only when no bracketed integer is present.
pub fn parse_ranking(raw: &str, n: usize) -> Result<(Permutation, RepairLog), Unparseable> {
    let ids = bracketed_integers(raw);
    if ids.is_empty() {
        return Err(Unparseable(raw.into()));
    }
    let mut log = Vec::new();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for (pos, &value) in ids.iter().enumerate() {
        let position = pos + 1;
        if value == 0 || value > n as u64 {
            log.push(Repair::OutOfRange { value, position });
            continue;
        }
        let index = value as usize;
        if seen[index - 1] {
            log.push(Repair::Duplicate { index, position });
            continue;
        }
        seen[index - 1] = true;
        order.push(index);
    }
    for (i, _) in seen.iter().enumerate().filter(|(_, s)| !**s) {
        log.push(Repair::Missing { index: i + 1 });
        order.push(i + 1);
    }
    Ok((Permutation::from_valid(order), RepairLog(log)))
}

/// Fallback when output cannot be parsed at all: keep the input order.
pub(crate) fn fallback(n: usize) -> Permutation {
    identity_permutation(n)
}

/// `"[a] > [b] > ..."`.
pub fn render_ranking(perm: &Permutation) -> String {
    alloc::format!("{perm}")
}

/// Reads a yes/no answer from the first token, ignoring case and surrounding
/// punctuation.
pub fn parse_yes_no(raw: &str) -> Result<bool, Unparseable> {
    let token = raw
        .split_whitespace()
        .next()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .unwrap_or("");
    if token.eq_ignore_ascii_case("yes") {
        Ok(true)
    } else if token.eq_ignore_ascii_case("no") {
        Ok(false)
    } else {
        Err(Unparseable(raw.into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_output() {
        let (p, log) = parse_ranking("[2] > [1] > [3]", 3).unwrap();
        assert_eq!(p.order(), &[2, 1, 3]);
        assert!(log.is_empty());
    }

    #[test]
    fn duplicate_and_missing_are_repaired() {
        let (p, log) = parse_ranking("[2] > [2] > [1]", 3).unwrap();
        assert_eq!(p.order(), &[2, 1, 3]);
        assert_eq!(
            log.0,
            [
                Repair::Duplicate {
                    index: 2,
                    position: 2
                },
                Repair::Missing { index: 3 }
            ]
        );
    }

    #[test]
    fn out_of_range_dropped() {
        let (p, log) = parse_ranking("[0] > [4] > [3] > [99999999999999999999999]", 3).unwrap();
        assert_eq!(p.order(), &[3, 1, 2]);
        assert_eq!(log.len(), 5);
        assert_eq!(
            log.0[2],
            Repair::OutOfRange {
                value: u64::MAX,
                position: 4
            }
        );
    }

    #[test]
    fn unparseable() {
        assert!(parse_ranking("no brackets here", 3).is_err());
        assert!(parse_ranking("[] > [a] > [-1]", 3).is_err());
    }

    #[test]
    fn tolerant_tokenizer() {
        assert_eq!(bracketed_integers("Ranking: [ 3 ] > [1]>[2]."), [3, 1, 2]);
        assert_eq!(bracketed_integers("[[2]] [x] [4"), [2]);
    }

    #[test]
    fn yes_no() {
        assert_eq!(parse_yes_no("Yes"), Ok(true));
        assert_eq!(parse_yes_no("  no."), Ok(false));
        assert_eq!(parse_yes_no("YES, it is"), Ok(true));
        assert!(parse_yes_no("maybe").is_err());
        assert!(parse_yes_no("").is_err());
    }

    #[test]
    fn render_round_trip() {
        let (p, _) = parse_ranking("[3] > [1] > [2]", 3).unwrap();
        assert_eq!(render_ranking(&p), "[3] > [1] > [2]");
    }
}
