//! `credi eval`: score a saved predictions file against gold labels.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use credi_core::evaluation::evaluate;
use credi_core::pipeline::load_predictions;

use crate::config::PipelineConfig;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Corpus holding the gold labels (default: paths.corpus).
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Predictions written by `run` (default: {out_dir}/predictions.jsonl).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Report file to write (default: {out_dir}/report.json).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(cfg: &PipelineConfig, args: &EvalArgs) -> Result<()> {
    let dir = super::out_dir(cfg, None)?;
    let gold_path = args.gold.clone().unwrap_or_else(|| cfg.paths.corpus.clone());
    let pred_path = args.predictions.clone().unwrap_or_else(|| dir.join("predictions.jsonl"));
    let out_path = args.output.clone().unwrap_or_else(|| dir.join("report.json"));

    let ds = super::load_corpus(&gold_path)?;
    let records = load_predictions(&pred_path)?;
    let dims = cfg.prompt_mode()?.dimensions();
    // Gold must cover exactly the predicted instances, so scoring a
    // split-level run against the whole corpus fails; point at the split.
    let report = evaluate(&ds.instances, &records, &dims).with_context(|| {
        format!(
            "cannot score {} against {}; pass --gold pointing at the split the \
             predictions were made from (a default run predicts {}/test.jsonl)",
            pred_path.display(),
            gold_path.display(),
            dir.display(),
        )
    })?;

    super::write_json(&report, &out_path)?;
    print!("{}", report.render_text());
    println!("report written to {}", out_path.display());
    Ok(())
}
