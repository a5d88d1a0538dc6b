//! `credi ablate`: run the prompt-mode by dialogue-variant grid and
//! report weighted F1 per cell.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use credi_core::corpus::split_dataset;
use credi_core::evaluation::run_ablation;
use credi_core::pipeline::run_ablation_cell;
use credi_core::prompting::PromptConfig;

use crate::config::PipelineConfig;

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Corpus to run on (default: paths.corpus).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Split to evaluate: train, val or test.
    #[arg(long, default_value = "test")]
    pub eval_split: String,
    /// Grid report to write (default: {out_dir}/ablation.json).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(cfg: &PipelineConfig, args: &AblateArgs) -> Result<()> {
    let input = args.input.clone().unwrap_or_else(|| cfg.paths.corpus.clone());
    let dir = super::out_dir(cfg, None)?;
    let out_path = args.output.clone().unwrap_or_else(|| dir.join("ablation.json"));

    let ds = super::load_corpus(&input)?;
    let parts = split_dataset(&ds, &cfg.split_spec())?;
    let (train, eval) = super::pick_split(parts, &args.eval_split)?;

    let base = cfg.prompt_config()?;
    let ablation_cfg = cfg.ablation_config()?;
    let embedder = super::build_embedder(cfg)?;
    let backend = super::build_backend(cfg, Some(&eval))?;

    let table = run_ablation(&ablation_cfg, |mode, variant, shots| {
        let cell_cfg =
            PromptConfig { dialogue_variant: variant, exemplar_count: shots, ..base.clone() };
        run_ablation_cell(
            mode,
            &train,
            &eval,
            &cell_cfg,
            embedder.as_ref(),
            backend.as_ref(),
            cfg.backend.parallelism,
            false,
        )
        .map_err(|e| e.to_string())
    })
    .map_err(|e| anyhow::anyhow!("ablation grid: {e}"))?;

    super::write_json(&table, &out_path)?;
    print!("{}", table.render_text());
    println!("grid written to {}", out_path.display());
    Ok(())
}
