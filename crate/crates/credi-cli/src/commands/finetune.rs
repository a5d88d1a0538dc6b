//! `credi export-finetune`: instruction-tuning records from gold labels.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use credi_core::corpus::export_finetune_file;

use crate::config::PipelineConfig;

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    /// Corpus with gold labels (default: paths.corpus).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output JSONL (default: {out_dir}/finetune.jsonl).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(cfg: &PipelineConfig, args: &FinetuneArgs) -> Result<()> {
    let input = args.input.clone().unwrap_or_else(|| cfg.paths.corpus.clone());
    let dir = super::out_dir(cfg, None)?;
    let output = args.output.clone().unwrap_or_else(|| dir.join("finetune.jsonl"));

    let ds = super::load_corpus(&input)?;
    let prompt_cfg = cfg.prompt_config()?;
    let count = export_finetune_file(&ds, &prompt_cfg, &output)?;
    println!("wrote {count} instruction records to {}", output.display());
    Ok(())
}
