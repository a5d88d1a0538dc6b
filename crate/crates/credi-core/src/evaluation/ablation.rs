//! Ablation grid over prompt mode, dialogue variant, and shot count.
//!
//! The grid owner only orchestrates: a runner callback produces one
//! [`EvalReport`] per cell, and a failed cell is recorded instead of
//! aborting the remaining grid.

use serde::{Deserialize, Serialize};

use crate::dialogue::DialogueVariant;

use super::EvalReport;

/// Prompt-scope axis of the grid. `PerDimensionAll` runs one pass per
/// dimension and merges the three single-dimension reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationMode {
    Joint,
    PerDimensionAll,
}

impl std::fmt::Display for AblationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AblationMode::Joint => "joint",
            AblationMode::PerDimensionAll => "per-dimension",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub modes: Vec<AblationMode>,
    pub variants: Vec<DialogueVariant>,
    pub shots: Vec<usize>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            modes: vec![AblationMode::Joint, AblationMode::PerDimensionAll],
            variants: vec![DialogueVariant::Expanded, DialogueVariant::Basic],
            shots: vec![3],
        }
    }
}

impl AblationConfig {
    pub fn cell_count(&self) -> usize {
        self.modes.len() * self.variants.len() * self.shots.len()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.cell_count() == 0 {
            return Err("ablation grid is empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Report { report: EvalReport },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub mode: AblationMode,
    pub variant: DialogueVariant,
    pub shots: usize,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub cells: Vec<AblationCell>,
}

/// Runs every cell of the grid in a fixed order (modes, then variants,
/// then shots). The runner's error string marks the cell failed.
pub fn run_ablation<F>(cfg: &AblationConfig, mut runner: F) -> Result<AblationTable, String>
where
    F: FnMut(AblationMode, DialogueVariant, usize) -> Result<EvalReport, String>,
{
    cfg.validate()?;
    let mut cells = Vec::with_capacity(cfg.cell_count());
    for mode in &cfg.modes {
        for variant in &cfg.variants {
            for shots in &cfg.shots {
                let outcome = match runner(*mode, *variant, *shots) {
                    Ok(report) => CellOutcome::Report { report },
                    Err(error) => CellOutcome::Failed { error },
                };
                cells.push(AblationCell { mode: *mode, variant: *variant, shots: *shots, outcome });
            }
        }
    }
    Ok(AblationTable { cells })
}

impl AblationTable {
    /// Fixed-width comparison table: one row per cell, one weighted-F1
    /// column per dimension.
    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(
            out,
            "{:<14} {:<9} {:>5}  {:>9} {:>9} {:>9}",
            "mode", "variant", "shots", "polarity", "rel_type", "hierarchy"
        )
        .unwrap();
        for cell in &self.cells {
            write!(out, "{:<14} {:<9} {:>5}  ", cell.mode.to_string(), cell.variant.to_string(), cell.shots)
                .unwrap();
            match &cell.outcome {
                CellOutcome::Report { report } => {
                    for dim in crate::corpus::Dimension::ALL {
                        match report.weighted_f1(dim) {
                            Some(score) => write!(out, "{score:>9.4} ").unwrap(),
                            None => write!(out, "{:>9} ", "-").unwrap(),
                        }
                    }
                    writeln!(out).unwrap();
                }
                CellOutcome::Failed { error } => writeln!(out, "FAILED: {error}").unwrap(),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use crate::corpus::Dimension;
    use crate::evaluation::REPORT_FORMAT_VERSION;

    use super::*;

    fn fake_report(score: f64) -> EvalReport {
        EvalReport {
            report_version: REPORT_FORMAT_VERSION,
            instance_count: 4,
            dimensions: Dimension::ALL
                .iter()
                .map(|dim| crate::evaluation::DimensionReport {
                    dimension: *dim,
                    weighted_f1: score,
                    per_class: vec![],
                    confusion: crate::evaluation::ConfusionMatrix {
                        rows: vec![],
                        columns: vec![],
                        counts: vec![],
                    },
                    parse_failure_count: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn grid_produces_one_cell_per_combination() {
        let cfg = AblationConfig {
            modes: vec![AblationMode::Joint, AblationMode::PerDimensionAll],
            variants: vec![DialogueVariant::Expanded, DialogueVariant::Basic],
            shots: vec![0, 3],
        };
        let mut calls = Vec::new();
        let table = run_ablation(&cfg, |m, v, s| {
            calls.push((m, v, s));
            Ok(fake_report(1.0))
        })
        .unwrap();
        assert_eq!(table.cells.len(), 8);
        assert_eq!(calls.len(), 8);
        assert_eq!(calls[0], (AblationMode::Joint, DialogueVariant::Expanded, 0));
        assert_eq!(calls[7], (AblationMode::PerDimensionAll, DialogueVariant::Basic, 3));
    }

    #[test]
    fn failed_cells_do_not_abort_the_grid() {
        let cfg = AblationConfig {
            modes: vec![AblationMode::Joint],
            variants: vec![DialogueVariant::Expanded, DialogueVariant::Basic],
            shots: vec![1],
        };
        let table = run_ablation(&cfg, |_, variant, _| match variant {
            DialogueVariant::Basic => Err("scripted failure".into()),
            DialogueVariant::Expanded => Ok(fake_report(0.5)),
        })
        .unwrap();
        assert_eq!(table.cells.len(), 2);
        assert!(matches!(table.cells[0].outcome, CellOutcome::Report { .. }));
        assert!(matches!(table.cells[1].outcome, CellOutcome::Failed { .. }));
        let text = table.render_text();
        assert!(text.contains("FAILED: scripted failure"), "{text}");
    }

    #[test]
    fn empty_grid_is_rejected() {
        let cfg = AblationConfig { modes: vec![], variants: vec![], shots: vec![] };
        assert!(run_ablation(&cfg, |_, _, _| Ok(fake_report(1.0))).is_err());
    }

    #[test]
    fn table_serializes_and_reloads_losslessly() {
        let cfg = AblationConfig::default();
        let table = run_ablation(&cfg, |_, _, _| Ok(fake_report(0.75))).unwrap();
        let json = serde_json::to_string(&table).unwrap();
        let back: AblationTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn render_text_lists_scores_per_dimension() {
        let table = run_ablation(&AblationConfig::default(), |_, _, _| Ok(fake_report(1.0))).unwrap();
        let text = table.render_text();
        assert!(text.contains("polarity"), "{text}");
        let score_rows = text.lines().filter(|l| l.contains("1.0000")).count();
        assert_eq!(score_rows, 4);
    }
}
