//! `credi index`: embed the training split and save the retrieval index.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use credi_core::retrieval::build_index;

use crate::config::PipelineConfig;

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Training corpus (default: {out_dir}/train.jsonl).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Index file to write (default: {out_dir}/index.json).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(cfg: &PipelineConfig, args: &IndexArgs) -> Result<()> {
    let dir = super::out_dir(cfg, None)?;
    let train_path = args.train.clone().unwrap_or_else(|| dir.join("train.jsonl"));
    let output = args.output.clone().unwrap_or_else(|| dir.join("index.json"));

    let train = super::load_corpus(&train_path)?;
    let prompt_cfg = cfg.prompt_config()?;
    let embedder = super::build_embedder(cfg)?;
    let index = build_index(&train, &prompt_cfg, embedder.as_ref())?;
    index.save(&output)?;
    println!(
        "indexed {} instances (dim {}, embedder {}) into {}",
        index.entries.len(),
        index.dim,
        index.embedder,
        output.display()
    );
    Ok(())
}
