//! `credi network`: build the character network and export it.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use credi_core::network::{
    build_network, export_network, load_roles, quote_counts_from_units, ExportFormat, LabelSource,
};
use credi_core::pipeline::{load_predictions, merge_predictions};

use crate::config::PipelineConfig;

#[derive(Debug, Args)]
pub struct NetworkArgs {
    /// Corpus with labeled instances (default: paths.corpus).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Label source: gold or predicted.
    #[arg(long, default_value = "gold")]
    pub source: String,
    /// Merge these predictions into the corpus first (pair with
    /// --source predicted).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Export format: graphml, dot, json or all.
    #[arg(long, default_value = "all")]
    pub format: String,
    /// Role assignments file ({"name": "protagonist" | "antagonist"}).
    #[arg(long)]
    pub roles: Option<PathBuf>,
    /// Also draw roster characters that appear in no labeled pair.
    #[arg(long)]
    pub include_isolated: bool,
    /// Output directory (default: paths.out_dir).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn run(cfg: &PipelineConfig, args: &NetworkArgs) -> Result<()> {
    let input = args.input.clone().unwrap_or_else(|| cfg.paths.corpus.clone());
    let dir = super::out_dir(cfg, args.out_dir.as_ref())?;

    let mut ds = super::load_corpus(&input)?;
    if let Some(pred_path) = &args.predictions {
        let records = load_predictions(pred_path)?;
        let filled = merge_predictions(&mut ds, &records);
        println!("merged predictions for {filled} instances");
    }

    let source = match args.source.as_str() {
        "gold" => LabelSource::Gold,
        "predicted" => LabelSource::Predicted,
        other => bail!("unknown label source `{other}` (expected gold or predicted)"),
    };
    let roles = match &args.roles {
        Some(path) => load_roles(path)?,
        None => BTreeMap::new(),
    };
    let quote_counts = quote_counts_from_units(ds.units.values());
    let extra: Vec<String> = if args.include_isolated {
        ds.character_roster.iter().cloned().collect()
    } else {
        Vec::new()
    };

    let net = build_network(&ds.instances, source, &quote_counts, &roles, extra).with_context(
        || {
            if source == LabelSource::Predicted && args.predictions.is_none() {
                "predicted labels come from a predictions file; pass --predictions".to_string()
            } else {
                format!("building network from {}", input.display())
            }
        },
    )?;

    let formats: Vec<ExportFormat> = match args.format.as_str() {
        "all" => vec![ExportFormat::GraphMl, ExportFormat::Dot, ExportFormat::Json],
        other => vec![other.parse().map_err(|e: String| anyhow::anyhow!(e))?],
    };
    for format in formats {
        let ext = match format {
            ExportFormat::GraphMl => "graphml",
            ExportFormat::Dot => "dot",
            ExportFormat::Json => "json",
        };
        let path = dir.join(format!("network.{ext}"));
        export_network(&net, format, &path)?;
        println!("wrote {}", path.display());
    }
    println!("{} nodes, {} edges ({} labels)", net.nodes.len(), net.edges.len(), args.source);
    Ok(())
}
