//! `credi split`: partition a corpus into train/val/test files.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use credi_core::corpus::{save_dataset, split_dataset};

use crate::config::PipelineConfig;

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Input corpus (default: paths.corpus).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Directory for train.jsonl, val.jsonl, test.jsonl (default: paths.out_dir).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn run(cfg: &PipelineConfig, args: &SplitArgs) -> Result<()> {
    let input = args.input.clone().unwrap_or_else(|| cfg.paths.corpus.clone());
    let dir = super::out_dir(cfg, args.out_dir.as_ref())?;

    let ds = super::load_corpus(&input)?;
    let (train, val, test) = split_dataset(&ds, &cfg.split_spec())?;
    for (part, name) in [(&train, "train"), (&val, "val"), (&test, "test")] {
        save_dataset(part, dir.join(format!("{name}.jsonl")))?;
    }
    println!(
        "split {} instances into {}/{}/{} (seed {}) under {}",
        ds.instances.len(),
        train.instances.len(),
        val.instances.len(),
        test.instances.len(),
        cfg.split.seed,
        dir.display()
    );
    Ok(())
}
