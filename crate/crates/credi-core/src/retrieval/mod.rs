//! Embedding index and exact Top-K exemplar retrieval.
//!
//! The index is exact: Top-K is a full scan over cosine scores (dot
//! products on unit vectors). Corpus-scale inputs are a few thousand
//! vectors, where exact search is both fast and exactly testable against a
//! brute-force oracle.

mod embedder;

pub use embedder::{Embedder, HashEmbedder, RemoteEmbedder, DEFAULT_HASH_DIM};

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Dataset;
use crate::dialogue::dialogue_text;
use crate::prompting::{AnswerLine, Exemplar, PromptConfig};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("training set has no instances")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding failed for instance {instance_id} after {completed} completed: {detail}")]
    EmbedderFailure { instance_id: String, completed: usize, detail: String },
    #[error("duplicate instance id {0} in index")]
    DuplicateId(String),
    #[error("exemplar instance {0} has no gold labels")]
    MissingGold(String),
    #[error("index entry {0} not present in the training set")]
    UnknownInstance(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("embedding endpoint: {0}")]
    Http(String),
    #[error("index file: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A unit-norm embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    pub values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> EmbeddingVector {
        EmbeddingVector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f32 {
        self.values.iter().map(|x| x * x).sum::<f32>().sqrt()
    }

    /// L2-normalizes; the zero vector maps to the first basis vector so
    /// downstream math never sees NaN.
    pub fn normalized(mut self) -> EmbeddingVector {
        let norm = self.norm();
        if norm > 0.0 && norm.is_finite() {
            for x in &mut self.values {
                *x /= norm;
            }
        } else if !self.values.is_empty() {
            self.values.fill(0.0);
            self.values[0] = 1.0;
        }
        self
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f32 {
        debug_assert_eq!(self.dim(), other.dim());
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }
}

/// Exact-search index: one entry per training instance, insertion order
/// preserved. Immutable after build; concurrent queries are safe.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalIndex {
    pub dim: usize,
    pub embedder: String,
    pub entries: Vec<(String, EmbeddingVector)>,
}

pub const INDEX_FORMAT_VERSION: u32 = 1;

/// On-disk shape of the index: versioned JSON with a header and entries.
#[derive(Serialize, Deserialize)]
struct IndexFile {
    version: u32,
    dim: usize,
    count: usize,
    embedder: String,
    entries: Vec<IndexEntry>,
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    id: String,
    vector: EmbeddingVector,
}

/// The text that gets embedded for an instance: the rendered dialogue plus
/// a target-pair line, so the pair identity contributes to similarity.
pub fn embedding_text(ds: &Dataset, instance_idx: usize, cfg: &PromptConfig) -> String {
    let inst = &ds.instances[instance_idx];
    let unit = ds.units.get(&inst.unit_id).expect("validated dataset");
    format!(
        "{}\nTARGET: {} -> {}",
        dialogue_text(unit, cfg.dialogue_variant, cfg.locale),
        inst.subject,
        inst.object
    )
}

/// Embeds every training instance in dataset order.
///
/// On embedder failure the error reports how many instances had already
/// succeeded, so callers can report partial progress.
pub fn build_index(
    train: &Dataset,
    cfg: &PromptConfig,
    embedder: &dyn Embedder,
) -> Result<RetrievalIndex, RetrievalError> {
    if train.instances.is_empty() {
        return Err(RetrievalError::EmptyDataset);
    }
    let mut seen = BTreeSet::new();
    let mut entries = Vec::with_capacity(train.instances.len());
    for idx in 0..train.instances.len() {
        let id = train.instances[idx].id.clone();
        if !seen.insert(id.clone()) {
            return Err(RetrievalError::DuplicateId(id));
        }
        let text = embedding_text(train, idx, cfg);
        let vector = embedder.embed(&text).map_err(|e| RetrievalError::EmbedderFailure {
            instance_id: id.clone(),
            completed: entries.len(),
            detail: e.to_string(),
        })?;
        if vector.dim() != embedder.dim() {
            return Err(RetrievalError::DimensionMismatch {
                expected: embedder.dim(),
                got: vector.dim(),
            });
        }
        entries.push((id, vector.normalized()));
    }
    Ok(RetrievalIndex {
        dim: embedder.dim(),
        embedder: embedder.name().to_string(),
        entries,
    })
}

/// Exact Top-K by cosine similarity.
///
/// Results are sorted by score descending, ties broken by ascending id;
/// length is `min(k, |index|)`.
pub fn topk(
    index: &RetrievalIndex,
    query: &EmbeddingVector,
    k: usize,
) -> Result<Vec<(String, f32)>, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    if query.dim() != index.dim {
        return Err(RetrievalError::DimensionMismatch { expected: index.dim, got: query.dim() });
    }
    let mut scored: Vec<(&String, f32)> =
        index.entries.iter().map(|(id, v)| (id, query.dot(v))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    scored.truncate(k);
    Ok(scored.into_iter().map(|(id, s)| (id.clone(), s)).collect())
}

/// Picks the k most similar training exemplars for a query instance.
///
/// Every selected id must resolve to a gold-labeled training instance; the
/// query's own id is skipped when `exclude_self` is set. Ordering matches
/// [`topk`] (most similar first). `k = 0` short-circuits to an empty list.
pub fn select_exemplars(
    index: &RetrievalIndex,
    query: &EmbeddingVector,
    query_instance_id: &str,
    k: usize,
    train: &Dataset,
    cfg: &PromptConfig,
    exclude_self: bool,
) -> Result<Vec<Exemplar>, RetrievalError> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let want = if exclude_self { k + 1 } else { k };
    let mut hits = topk(index, query, want)?;
    if exclude_self {
        hits.retain(|(id, _)| id != query_instance_id);
        hits.truncate(k);
    }

    let by_id: BTreeMap<&str, usize> = train
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| (inst.id.as_str(), i))
        .collect();
    hits.into_iter()
        .map(|(id, _)| {
            let idx = *by_id
                .get(id.as_str())
                .ok_or_else(|| RetrievalError::UnknownInstance(id.clone()))?;
            let inst = &train.instances[idx];
            let gold = inst.gold.ok_or_else(|| RetrievalError::MissingGold(id.clone()))?;
            let unit = train.units.get(&inst.unit_id).expect("validated dataset");
            Ok(Exemplar {
                dialogue: dialogue_text(unit, cfg.dialogue_variant, cfg.locale),
                subject: inst.subject.clone(),
                object: inst.object.clone(),
                answer: AnswerLine::for_mode(&gold, cfg.mode),
            })
        })
        .collect()
}

impl RetrievalIndex {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RetrievalError> {
        let file = IndexFile {
            version: INDEX_FORMAT_VERSION,
            dim: self.dim,
            count: self.entries.len(),
            embedder: self.embedder.clone(),
            entries: self
                .entries
                .iter()
                .map(|(id, v)| IndexEntry { id: id.clone(), vector: v.clone() })
                .collect(),
        };
        let mut out = BufWriter::new(File::create(path.as_ref())?);
        serde_json::to_writer(&mut out, &file)
            .map_err(|e| RetrievalError::Schema(e.to_string()))?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RetrievalIndex, RetrievalError> {
        let file: IndexFile = serde_json::from_reader(BufReader::new(File::open(path.as_ref())?))
            .map_err(|e| RetrievalError::Schema(e.to_string()))?;
        if file.version != INDEX_FORMAT_VERSION {
            return Err(RetrievalError::Schema(format!(
                "unsupported index version {} (expected {INDEX_FORMAT_VERSION})",
                file.version
            )));
        }
        if file.count != file.entries.len() {
            return Err(RetrievalError::Schema(format!(
                "header count {} != {} entries",
                file.count,
                file.entries.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for entry in &file.entries {
            if entry.vector.dim() != file.dim {
                return Err(RetrievalError::DimensionMismatch {
                    expected: file.dim,
                    got: entry.vector.dim(),
                });
            }
            if !seen.insert(entry.id.clone()) {
                return Err(RetrievalError::DuplicateId(entry.id.clone()));
            }
        }
        Ok(RetrievalIndex {
            dim: file.dim,
            embedder: file.embedder,
            entries: file.entries.into_iter().map(|e| (e.id, e.vector)).collect(),
        })
    }
}
