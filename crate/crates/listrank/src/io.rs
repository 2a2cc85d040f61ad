//! JSON-lines and TREC files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use listrank_core::embed::{check_collection, EmbedError, EmbeddingRecord};
use listrank_core::eval::{self, EvalError, Qrels, RunEntry};
use listrank_core::{Document, ModelError, Query};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Trec {
        path: PathBuf,
        #[source]
        source: EvalError,
    },
    #[error("{path}:{line}: {source}")]
    Record {
        path: PathBuf,
        line: usize,
        #[source]
        source: ModelError,
    },
    #[error("{path}: {source}")]
    Embeddings {
        path: PathBuf,
        #[source]
        source: EmbedError,
    },
    #[error("{path}:{line}: {message}")]
    Invalid {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.into(),
        source,
    }
}

pub fn read_to_string(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Parses one JSON value per non-blank line, returning each with its line
/// number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| IoError::Json {
            path: path.into(),
            line: i + 1,
            source,
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

/// Writes `header` (if any) then one JSON line per item.
pub fn write_jsonl<H: Serialize, T: Serialize>(
    path: &Path,
    header: Option<&H>,
    items: impl IntoIterator<Item = T>,
) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut put = |line: String| writeln!(w, "{line}").map_err(io_err(path));
    if let Some(h) = header {
        put(to_json_line(h))?;
    }
    for item in items {
        put(to_json_line(&item))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn to_json_line<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("in-memory values serialize")
}

fn check_unique<'a>(
    path: &Path,
    ids: impl Iterator<Item = (usize, &'a str)>,
) -> Result<(), IoError> {
    let mut seen = BTreeMap::new();
    for (line, id) in ids {
        if let Some(first) = seen.insert(id, line) {
            return Err(IoError::Invalid {
                path: path.into(),
                line,
                message: format!("id {id} already defined on line {first}"),
            });
        }
    }
    Ok(())
}

/// Corpus file: `{"id", "text"?, "image_ref"?, "modality"}` per line.
pub fn read_corpus(path: &Path) -> Result<BTreeMap<String, Document>, IoError> {
    let rows: Vec<(usize, Document)> = read_jsonl(path)?;
    check_unique(path, rows.iter().map(|(l, d)| (*l, d.id.as_str())))?;
    let mut out = BTreeMap::new();
    for (line, doc) in rows {
        doc.validate().map_err(|source| IoError::Record {
            path: path.into(),
            line,
            source,
        })?;
        out.insert(doc.id.clone(), doc);
    }
    Ok(out)
}

/// Queries file: `{"id", "text"}` per line, in file order.
pub fn read_queries(path: &Path) -> Result<Vec<Query>, IoError> {
    let rows: Vec<(usize, Query)> = read_jsonl(path)?;
    check_unique(path, rows.iter().map(|(l, q)| (*l, q.id.as_str())))?;
    rows.into_iter()
        .map(|(line, q)| {
            q.validate().map_err(|source| IoError::Record {
                path: path.into(),
                line,
                source,
            })?;
            Ok(q)
        })
        .collect()
}

/// Embeddings file: `{"id", "vector": [...]}` per line, uniform dimension.
pub fn read_embeddings(path: &Path) -> Result<Vec<EmbeddingRecord>, IoError> {
    let rows: Vec<(usize, EmbeddingRecord)> = read_jsonl(path)?;
    check_unique(path, rows.iter().map(|(l, r)| (*l, r.id.as_str())))?;
    let records: Vec<EmbeddingRecord> = rows.into_iter().map(|(_, r)| r).collect();
    check_collection(&records).map_err(|source| IoError::Embeddings {
        path: path.into(),
        source,
    })?;
    Ok(records)
}

pub fn read_qrels(path: &Path, strict: bool) -> Result<Qrels, IoError> {
    eval::parse_qrels(&read_to_string(path)?, strict).map_err(|source| IoError::Trec {
        path: path.into(),
        source,
    })
}

/// Query grouping file: `qid group` per line.
pub fn read_groups(path: &Path, qrels: &mut Qrels) -> Result<(), IoError> {
    for (i, line) in read_to_string(path)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[..] {
            [] => {}
            [qid, group] => qrels.set_group(qid, group),
            _ => {
                return Err(IoError::Trec {
                    path: path.into(),
                    source: EvalError::MalformedLine {
                        line: i + 1,
                        content: line.into(),
                    },
                })
            }
        }
    }
    Ok(())
}

pub fn write_qrels(qrels: &Qrels, path: &Path) -> Result<(), IoError> {
    fs::write(path, eval::format_qrels(qrels)).map_err(io_err(path))
}

pub fn read_run(path: &Path) -> Result<Vec<RunEntry>, IoError> {
    eval::parse_run(&read_to_string(path)?).map_err(|source| IoError::Trec {
        path: path.into(),
        source,
    })
}

pub fn write_run(entries: &[RunEntry], path: &Path) -> Result<(), IoError> {
    fs::write(path, eval::format_run(entries)).map_err(io_err(path))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}
