//! `credi ingest`: segment raw novel files into a dialogue-unit corpus.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use credi_core::corpus::{save_dataset, Dataset};
use credi_core::dialogue::segment_dialogue_chains;

use crate::config::PipelineConfig;

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Novel file or directory of .txt files (default: paths.novels).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Character roster, one name per line.
    #[arg(long)]
    pub roster: PathBuf,
    /// Output corpus file (default: paths.corpus).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(cfg: &PipelineConfig, args: &IngestArgs) -> Result<()> {
    let input = args.input.clone().unwrap_or_else(|| cfg.paths.novels.clone());
    let output = args.output.clone().unwrap_or_else(|| cfg.paths.corpus.clone());

    let roster = read_roster(&args.roster)?;
    if roster.is_empty() {
        bail!("roster {} names no characters", args.roster.display());
    }

    let files = novel_files(&input)?;
    let seg_cfg = cfg.segmenter_config();
    let mut units = Vec::new();
    let mut quote_total = 0;
    let mut warning_total = 0;
    for file in &files {
        let text = read_utf8(file)?;
        let novel_id = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "novel".to_string());
        let seg = segment_dialogue_chains(&text, &roster, &seg_cfg, &novel_id);
        for w in &seg.warnings {
            log::warn!("{}: {w}", file.display());
        }
        let quotes: usize = seg.units.iter().map(|u| u.quotes.len()).sum();
        println!(
            "{}: {} units, {} quotes, {} warnings",
            file.display(),
            seg.units.len(),
            quotes,
            seg.warnings.len()
        );
        quote_total += quotes;
        warning_total += seg.warnings.len();
        units.extend(seg.units);
    }

    let unit_count = units.len();
    let ds = Dataset::from_parts(units, Vec::new())?;
    save_dataset(&ds, &output)?;
    println!(
        "wrote {unit_count} units ({quote_total} quotes, {warning_total} warnings) to {}",
        output.display()
    );
    Ok(())
}

fn read_roster(path: &PathBuf) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read roster {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

/// Files to ingest: the path itself, or the sorted .txt entries of a
/// directory. An empty directory is fine and yields an empty corpus.
fn novel_files(input: &PathBuf) -> Result<Vec<PathBuf>> {
    let meta = std::fs::metadata(input)
        .with_context(|| format!("cannot stat input {}", input.display()))?;
    if meta.is_file() {
        return Ok(vec![input.clone()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)
        .with_context(|| format!("cannot read directory {}", input.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"))
        .collect();
    files.sort();
    Ok(files)
}

/// Reads a file, reporting the byte offset of the first invalid UTF-8
/// sequence instead of a generic conversion error.
fn read_utf8(path: &PathBuf) -> Result<String> {
    let bytes =
        std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    String::from_utf8(bytes).map_err(|e| {
        let pos = e.utf8_error().valid_up_to();
        anyhow::Error::new(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{}: invalid UTF-8 at byte {pos}", path.display()),
        ))
    })
}
