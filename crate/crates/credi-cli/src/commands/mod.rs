//! One module per subcommand plus the helpers they share.

pub mod ablate;
pub mod eval;
pub mod finetune;
pub mod index;
pub mod ingest;
pub mod network;
pub mod run;
pub mod split;
pub mod stats;

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use credi_core::corpus::{load_dataset, Dataset};
use credi_core::inference::Backend;
use credi_core::retrieval::{Embedder, HashEmbedder, RemoteEmbedder};

use crate::config::PipelineConfig;

pub(crate) fn load_corpus(path: &Path) -> Result<Dataset> {
    load_dataset(path).with_context(|| format!("loading corpus {}", path.display()))
}

/// Resolves the output directory and makes sure it exists.
pub(crate) fn out_dir(cfg: &PipelineConfig, flag: Option<&PathBuf>) -> Result<PathBuf> {
    let dir = flag.cloned().unwrap_or_else(|| cfg.paths.out_dir.clone());
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

/// Pretty JSON plus a trailing newline, so artifacts diff cleanly.
pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub(crate) fn build_embedder(cfg: &PipelineConfig) -> Result<Box<dyn Embedder>> {
    match cfg.retrieval.embedder.as_str() {
        "hash" => Ok(Box::new(HashEmbedder::new(cfg.retrieval.dim))),
        "remote" => {
            let Some(endpoint) = &cfg.retrieval.endpoint else {
                bail!("retrieval.endpoint is required for the remote embedder");
            };
            Ok(Box::new(RemoteEmbedder::new(
                endpoint.clone(),
                cfg.retrieval.model.clone(),
                cfg.retrieval.dim,
                Duration::from_secs(cfg.retrieval.timeout_secs),
            )))
        }
        other => bail!("unknown embedder `{other}` (expected hash or remote)"),
    }
}

/// Builds the configured backend. Fails before any network traffic when a
/// remote backend is misconfigured (missing endpoint, model, or API key).
pub(crate) fn build_backend(
    cfg: &PipelineConfig,
    gold_source: Option<&Dataset>,
) -> Result<Box<dyn Backend>> {
    let backend_cfg = cfg.backend_config()?;
    Ok(backend_cfg.build(gold_source)?)
}

/// Picks one part of a train/val/test split by name.
pub(crate) fn pick_split(
    parts: (Dataset, Dataset, Dataset),
    name: &str,
) -> Result<(Dataset, Dataset)> {
    let (train, val, test) = parts;
    let eval = match name {
        "train" => train.clone(),
        "val" => val,
        "test" => test,
        other => bail!("unknown split `{other}` (expected train, val or test)"),
    };
    Ok((train, eval))
}
