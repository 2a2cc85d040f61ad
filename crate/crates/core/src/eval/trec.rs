//! TREC text formats.
//!
//! Qrels: `qid 0 docid grade`. Run: `qid Q0 docid rank score tag`.
//! Fields are whitespace-separated on input; output uses single spaces and
//! a trailing newline per line, with scores in shortest round-trip form.
//! Blank lines are skipped.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::qrels::validate_with_lines;
use super::{EvalError, Qrels, RunEntry};

fn malformed(line: usize, content: &str) -> EvalError {
    EvalError::MalformedLine {
        line,
        content: content.into(),
    }
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, _, f)| !f.is_empty())
}

/// Parses qrels. In strict mode a repeated (query, document) pair is an
/// error; otherwise the last grade wins.
pub fn parse_qrels(text: &str, strict: bool) -> Result<Qrels, EvalError> {
    let mut qrels = Qrels::default();
    for (line, raw, fields) in lines(text) {
        let [qid, _iter, doc, grade] = fields[..] else {
            return Err(malformed(line, raw));
        };
        let grade: u32 = grade.parse().map_err(|_| malformed(line, raw))?;
        if qrels.insert(qid, doc, grade).is_some() && strict {
            return Err(EvalError::InvariantViolation {
                line,
                message: format!("duplicate judgment for ({qid}, {doc})"),
            });
        }
    }
    Ok(qrels)
}

/// Writes qrels sorted by query id then document id.
pub fn format_qrels(qrels: &Qrels) -> String {
    let mut out = String::new();
    for (qid, docs) in qrels.queries() {
        for (doc, grade) in docs {
            let _ = writeln!(out, "{qid} 0 {doc} {grade}");
        }
    }
    out
}

/// Parses and validates a run.
pub fn parse_run(text: &str) -> Result<Vec<RunEntry>, EvalError> {
    let mut entries = Vec::new();
    let mut line_numbers = Vec::new();
    for (line, raw, fields) in lines(text) {
        let [qid, _q0, doc, rank, score, tag] = fields[..] else {
            return Err(malformed(line, raw));
        };
        let rank: usize = rank.parse().map_err(|_| malformed(line, raw))?;
        let score: f64 = score.parse().map_err(|_| malformed(line, raw))?;
        if rank == 0 || !score.is_finite() {
            return Err(malformed(line, raw));
        }
        entries.push(RunEntry {
            query_id: qid.into(),
            doc_id: doc.into(),
            rank,
            score,
            tag: tag.into(),
        });
        line_numbers.push(line);
    }
    validate_with_lines(&entries, &line_numbers)?;
    Ok(entries)
}

/// Writes entries in the given order.
pub fn format_run(entries: &[RunEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(
            out,
            "{} Q0 {} {} {} {}",
            e.query_id, e.doc_id, e.rank, e.score, e.tag
        );
    }
    out
}
