use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::model::CandidateList;

/// Graded relevance judgments keyed by query then document, with an optional
/// query grouping used for macro averaging.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    group_of: BTreeMap<String, String>,
}

impl Qrels {
    /// Returns the previous grade if the pair was already judged.
    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) -> Option<u32> {
        self.judgments
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into(), grade)
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(query_id)?.get(doc_id).copied()
    }

    pub fn query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    /// Judged queries in id order.
    pub fn queries(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, u32>)> {
        self.judgments.iter().map(|(q, d)| (q.as_str(), d))
    }

    pub fn num_queries(&self) -> usize {
        self.judgments.len()
    }

    pub fn num_judgments(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn set_group(&mut self, query_id: &str, group: &str) {
        self.group_of.insert(query_id.into(), group.into());
    }

    pub fn group(&self, query_id: &str) -> Option<&str> {
        self.group_of.get(query_id).map(String::as_str)
    }

    pub fn has_groups(&self) -> bool {
        !self.group_of.is_empty()
    }
}

/// One line of a TREC run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub query_id: String,
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

impl RunEntry {
    /// Entries for a ranked candidate list. Scores come from the list when
    /// present, otherwise `n - r + 1`.
    pub fn from_ranked(list: &CandidateList, tag: &str) -> Vec<RunEntry> {
        let n = list.len();
        list.doc_ids
            .iter()
            .enumerate()
            .map(|(r, doc)| RunEntry {
                query_id: list.query_id.clone(),
                doc_id: doc.clone(),
                rank: r + 1,
                score: list
                    .first_stage_scores
                    .as_ref()
                    .map_or((n - r) as f64, |s| s[r]),
                tag: tag.into(),
            })
            .collect()
    }
}

/// Checks per-query run invariants: ranks are exactly `1..=m`, scores do
/// not increase with rank, documents are distinct. Errors report the
/// 1-based entry position.
pub fn validate_run(entries: &[RunEntry]) -> Result<(), EvalError> {
    let lines: Vec<usize> = (1..=entries.len()).collect();
    validate_with_lines(entries, &lines)
}

pub(crate) fn validate_with_lines(entries: &[RunEntry], lines: &[usize]) -> Result<(), EvalError> {
    let mut by_query: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        by_query.entry(e.query_id.as_str()).or_default().push(i);
    }
    let violation = |i: usize, message: String| EvalError::InvariantViolation {
        line: lines[i],
        message,
    };
    for (qid, mut idx) in by_query {
        idx.sort_by_key(|&i| (entries[i].rank, i));
        let mut docs = BTreeSet::new();
        for (pos, &i) in idx.iter().enumerate() {
            let e = &entries[i];
            if e.rank != pos + 1 {
                return Err(violation(
                    i,
                    format!("query {qid}: expected rank {}, found {}", pos + 1, e.rank),
                ));
            }
            if !docs.insert(e.doc_id.as_str()) {
                return Err(violation(
                    i,
                    format!("query {qid}: document {} repeated", e.doc_id),
                ));
            }
            if pos > 0 && e.score > entries[idx[pos - 1]].score {
                return Err(violation(
                    i,
                    format!("query {qid}: score increases at rank {}", e.rank),
                ));
            }
        }
    }
    Ok(())
}

/// Ranked document ids per query.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run(BTreeMap<String, Vec<String>>);

impl Run {
    /// Groups entries by query and orders each group by rank.
    pub fn from_entries(entries: &[RunEntry]) -> Self {
        let mut grouped: BTreeMap<String, Vec<(usize, &str)>> = BTreeMap::new();
        for e in entries {
            grouped
                .entry(e.query_id.clone())
                .or_default()
                .push((e.rank, e.doc_id.as_str()));
        }
        Run(grouped
            .into_iter()
            .map(|(q, mut docs)| {
                docs.sort_by_key(|(r, _)| *r);
                (q, docs.into_iter().map(|(_, d)| d.into()).collect())
            })
            .collect())
    }

    pub fn insert(&mut self, query_id: &str, ranked: Vec<String>) {
        self.0.insert(query_id.into(), ranked);
    }

    pub fn ranking(&self, query_id: &str) -> &[String] {
        self.0.get(query_id).map_or(&[], Vec::as_slice)
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn entry(q: &str, d: &str, rank: usize, score: f64) -> RunEntry {
        RunEntry {
            query_id: q.into(),
            doc_id: d.into(),
            rank,
            score,
            tag: "t".into(),
        }
    }

    #[test]
    fn run_invariants() {
        let ok = vec![
            entry("q", "a", 1, 2.0),
            entry("q", "b", 2, 1.0),
            entry("r", "a", 1, 5.0),
        ];
        assert!(validate_run(&ok).is_ok());
        let gap = vec![entry("q", "a", 1, 2.0), entry("q", "b", 3, 1.0)];
        assert!(matches!(
            validate_run(&gap),
            Err(EvalError::InvariantViolation { line: 2, .. })
        ));
        let dup = vec![entry("q", "a", 1, 2.0), entry("q", "a", 2, 1.0)];
        assert!(validate_run(&dup).is_err());
        let rising = vec![entry("q", "a", 1, 1.0), entry("q", "b", 2, 2.0)];
        assert!(validate_run(&rising).is_err());
    }

    #[test]
    fn from_ranked_uses_scores() {
        let list = CandidateList::new("q", vec!["x".into(), "y".into()]);
        let e = RunEntry::from_ranked(&list, "tag");
        assert_eq!((e[0].rank, e[0].score, e[1].score), (1, 2.0, 1.0));
        let run = Run::from_entries(&[entry("q", "b", 2, 0.0), entry("q", "a", 1, 1.0)]);
        assert_eq!(run.ranking("q"), ["a", "b"]);
        assert!(run.ranking("missing").is_empty());
    }
}
