//! Streaming, resumable teacher labeling.
//!
//! The label file starts with a manifest line and then holds one
//! `TeacherLabel` per line in query order. After every query a checkpoint
//! `<out>.ckpt` records how many queries are done and the byte length of
//! the label file at that point; resuming truncates to that length and
//! carries on with the next query.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use listrank_core::distill::{
    confidence_filter, DistillError, Distiller, PipelineConfig, TeacherLabel, CONFIDENCE_FORMULA,
};
use listrank_core::embed::EmbeddingRecord;
use listrank_core::rerank::{Backend, DocStore};
use listrank_core::Query;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{to_json_line, write_atomic, write_jsonl, IoError};
use crate::par::ordered_parallel;

#[derive(Debug, Error)]
pub enum DistillRunError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Config(#[from] DistillError),
    #[error("checkpoint {path} does not match this run: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
}

/// First line of every label file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelManifest {
    pub kind: String,
    pub confidence_formula: String,
    pub backend_tag: String,
    pub queries: usize,
    pub config: PipelineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub completed: usize,
    pub last_query_id: Option<String>,
    pub bytes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DistillSummary {
    pub queries: usize,
    pub labeled: usize,
    pub resumed_from: usize,
    pub failures: Vec<QueryFailure>,
    pub selected: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryFailure {
    pub query_id: String,
    pub error: String,
}

pub struct DistillJob<'a> {
    pub queries: &'a [Query],
    pub query_embs: &'a [EmbeddingRecord],
    pub corpus_embs: &'a [EmbeddingRecord],
    pub config: &'a PipelineConfig,
    pub out: &'a Path,
    /// Where to write the confidence-filtered subset, if wanted.
    pub selected: Option<&'a Path>,
    pub parallelism: usize,
    pub resume: bool,
}

pub fn checkpoint_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".ckpt");
    PathBuf::from(name)
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.into(),
        source,
    }
}

fn read_checkpoint(path: &Path) -> Result<Option<Checkpoint>, IoError> {
    match fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text)
            .map(Some)
            .map_err(|source| IoError::Json {
                path: path.into(),
                line: 1,
                source,
            }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_at(path)(e)),
    }
}

/// Opens the label file positioned after the last completed query and
/// returns how many queries that covers.
fn open_output(job: &DistillJob<'_>, header: &str) -> Result<(File, Checkpoint), DistillRunError> {
    let ckpt_path = checkpoint_path(job.out);
    let existing = if job.resume {
        read_checkpoint(&ckpt_path)?
    } else {
        None
    };
    let mismatch = |reason: String| DistillRunError::Checkpoint {
        path: ckpt_path.clone(),
        reason,
    };
    if let Some(ckpt) = existing {
        if ckpt.completed > job.queries.len() {
            return Err(mismatch(format!(
                "{} queries completed but only {} given",
                ckpt.completed,
                job.queries.len()
            )));
        }
        let expected_last = ckpt
            .completed
            .checked_sub(1)
            .map(|i| job.queries[i].id.clone());
        if expected_last != ckpt.last_query_id {
            return Err(mismatch("query order differs".into()));
        }
        let mut first = String::new();
        let file = File::open(job.out).map_err(io_at(job.out))?;
        BufReader::new(file)
            .read_line(&mut first)
            .map_err(io_at(job.out))?;
        if first.trim_end() != header {
            return Err(mismatch("manifest differs".into()));
        }
        let mut file = OpenOptions::new()
            .write(true)
            .open(job.out)
            .map_err(io_at(job.out))?;
        file.set_len(ckpt.bytes).map_err(io_at(job.out))?;
        file.seek(SeekFrom::End(0)).map_err(io_at(job.out))?;
        log::info!("resuming after {} completed queries", ckpt.completed);
        return Ok((file, ckpt));
    }
    let mut file = File::create(job.out).map_err(io_at(job.out))?;
    writeln!(file, "{header}").map_err(io_at(job.out))?;
    let bytes = file.stream_position().map_err(io_at(job.out))?;
    Ok((
        file,
        Checkpoint {
            completed: 0,
            last_query_id: None,
            bytes,
        },
    ))
}

fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), IoError> {
    write_atomic(path, to_json_line(ckpt).as_bytes())
}

/// Reads the labels back from a finished label file.
pub fn read_labels(path: &Path) -> Result<(LabelManifest, Vec<TeacherLabel>), IoError> {
    let file = File::open(path).map_err(io_at(path))?;
    let mut manifest = None;
    let mut labels = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_at(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let json_err = |source| IoError::Json {
            path: path.into(),
            line: i + 1,
            source,
        };
        if manifest.is_none() {
            manifest = Some(serde_json::from_str(&line).map_err(json_err)?);
        } else {
            labels.push(serde_json::from_str(&line).map_err(json_err)?);
        }
    }
    let manifest = manifest.ok_or_else(|| IoError::Invalid {
        path: path.into(),
        line: 1,
        message: "missing manifest line".into(),
    })?;
    Ok((manifest, labels))
}

/// Labels every query, streaming results to `job.out`. Per-query failures
/// are logged and listed in the summary; only configuration and IO errors
/// abort the run.
pub fn run_distill<S, B>(
    job: &DistillJob<'_>,
    docs: &S,
    backend: &B,
) -> Result<DistillSummary, DistillRunError>
where
    S: DocStore + Sync + ?Sized,
    B: Backend + Sync + ?Sized,
{
    let distiller = Distiller::new(job.corpus_embs, docs, backend, job.config)?;
    let manifest = LabelManifest {
        kind: "teacher_labels".into(),
        confidence_formula: CONFIDENCE_FORMULA.into(),
        backend_tag: backend.tag(),
        queries: job.queries.len(),
        config: job.config.clone(),
        budget: None,
    };
    let header = to_json_line(&manifest);
    let (mut file, mut ckpt) = open_output(job, &header)?;
    let ckpt_path = checkpoint_path(job.out);
    let mut summary = DistillSummary {
        queries: job.queries.len(),
        resumed_from: ckpt.completed,
        ..DistillSummary::default()
    };

    let remaining = &job.queries[ckpt.completed..];
    let label_one = |q: &Query| {
        job.query_embs
            .iter()
            .find(|r| r.id == q.id)
            .ok_or_else(|| DistillError::MissingQueryEmbedding(q.id.clone()))
            .and_then(|emb| distiller.label(q, &emb.vector))
    };
    ordered_parallel(remaining, job.parallelism, label_one, |i, result| {
        let query = &remaining[i];
        match result {
            Ok(label) => {
                writeln!(file, "{}", to_json_line(&label)).map_err(io_at(job.out))?;
                summary.labeled += 1;
            }
            Err(e) if e.is_fatal() => return Err(DistillRunError::from(e)),
            Err(e) => {
                log::warn!("query {}: {e}", query.id);
                summary.failures.push(QueryFailure {
                    query_id: query.id.clone(),
                    error: e.to_string(),
                });
            }
        }
        file.flush().map_err(io_at(job.out))?;
        ckpt.completed += 1;
        ckpt.last_query_id = Some(query.id.clone());
        ckpt.bytes = file.stream_position().map_err(io_at(job.out))?;
        write_checkpoint(&ckpt_path, &ckpt)?;
        Ok(())
    })?;
    file.sync_all().map_err(io_at(job.out))?;
    drop(file);

    if let Some(selected_path) = job.selected {
        let (_, labels) = read_labels(job.out)?;
        let budget = job.config.effective_budget();
        if labels.len() < budget {
            log::warn!(
                "only {} labels for a budget of {budget}; keeping all",
                labels.len()
            );
        }
        let kept = confidence_filter(labels, budget);
        summary.selected = Some(kept.len());
        let selected_manifest = LabelManifest {
            kind: "selected_teacher_labels".into(),
            budget: Some(budget),
            ..manifest
        };
        write_jsonl(selected_path, Some(&selected_manifest), &kept)?;
    }
    Ok(summary)
}
