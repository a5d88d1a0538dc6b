//! `credi stats`: corpus statistics as a table or JSON.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use credi_core::corpus::dataset_stats;

use crate::config::PipelineConfig;

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Corpus to describe (default: paths.corpus).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Emit JSON instead of the text table.
    #[arg(long)]
    pub json: bool,
}

pub fn run(cfg: &PipelineConfig, args: &StatsArgs) -> Result<()> {
    let input = args.input.clone().unwrap_or_else(|| cfg.paths.corpus.clone());
    let ds = super::load_corpus(&input)?;
    let report = dataset_stats(&ds);
    if args.json {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        print!("{text}");
    } else {
        print!("{}", report.render_text());
    }
    Ok(())
}
