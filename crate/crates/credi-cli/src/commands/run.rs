//! `credi run`: the full pipeline. Load, optionally anonymize, split,
//! retrieve, predict, evaluate, and write every artifact to the output
//! directory.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use credi_core::corpus::{anonymize_names, balance_labels, save_dataset, split_dataset};
use credi_core::pipeline::{run_extraction, save_predictions};
use credi_core::retrieval::RetrievalIndex;

use crate::config::PipelineConfig;

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Corpus to run on (default: paths.corpus).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Split to evaluate: train, val or test.
    #[arg(long, default_value = "test")]
    pub eval_split: String,
    /// Reuse a saved index instead of embedding the train split.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Drop the query instance from its own exemplar pool (for runs on
    /// the train split).
    #[arg(long)]
    pub exclude_self: bool,
}

pub fn run(cfg: &PipelineConfig, args: &RunArgs) -> Result<()> {
    let input = args.input.clone().unwrap_or_else(|| cfg.paths.corpus.clone());
    let dir = super::out_dir(cfg, None)?;

    let mut ds = super::load_corpus(&input)?;

    // Anonymize before splitting so exemplars and queries share one code
    // assignment.
    if cfg.anonymize.enabled {
        let (anon, name_map) = anonymize_names(&ds, cfg.anonymize.seed);
        super::write_json(&name_map, &dir.join("name_map.json"))?;
        ds = anon;
    }

    let parts = split_dataset(&ds, &cfg.split_spec())?;
    for (part, name) in [(&parts.0, "train"), (&parts.1, "val"), (&parts.2, "test")] {
        save_dataset(part, dir.join(format!("{name}.jsonl")))?;
    }
    let (mut train, eval) = super::pick_split(parts, &args.eval_split)?;

    if cfg.balance.enabled {
        let before = train.instances.len();
        train = balance_labels(
            &train,
            cfg.balance_dimension()?,
            cfg.balance.min_count,
            cfg.balance.max_count,
            cfg.balance.seed,
        )?;
        println!("balanced train split: {before} -> {} instances", train.instances.len());
    }

    let prompt_cfg = cfg.prompt_config()?;
    let embedder = super::build_embedder(cfg)?;
    let backend = super::build_backend(cfg, Some(&eval))?;
    let loaded_index = match &args.index {
        Some(path) => Some(RetrievalIndex::load(path)?),
        None => None,
    };

    let output = run_extraction(
        &train,
        &eval,
        &prompt_cfg,
        embedder.as_ref(),
        backend.as_ref(),
        cfg.backend.parallelism,
        args.exclude_self,
        loaded_index.as_ref(),
    )
    .with_context(|| {
        format!(
            "pipeline failed; partial artifacts remain in {} (train/val/test.jsonl)",
            dir.display()
        )
    })?;

    save_predictions(&output.predictions, dir.join("predictions.jsonl"))?;
    super::write_json(&output.report, &dir.join("report.json"))?;
    if let Some(index) = &output.index {
        index.save(dir.join("index.json"))?;
    }

    println!(
        "ran {} on {} instances ({} split)",
        cfg.prompt.mode,
        eval.instances.len(),
        args.eval_split
    );
    print!("{}", output.report.render_text());
    println!("artifacts in {}", dir.display());
    Ok(())
}
