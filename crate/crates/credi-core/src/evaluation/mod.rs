//! Per-dimension scoring with weighted F1.
//!
//! Parse failures are never excluded: an instance whose record has no
//! usable label for a dimension is scored against a reserved non-class, so
//! it counts as a missed prediction (recall loss) for its gold class while
//! leaving every real class's precision well defined.

mod ablation;

pub use ablation::{run_ablation, AblationCell, AblationConfig, AblationMode, AblationTable, CellOutcome};

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dimension, RelationInstance};
use crate::inference::PredictionRecord;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold and prediction lengths differ: {gold} vs {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("label `{0}` is not in the class list")]
    UnknownLabel(String),
    #[error("no prediction record for instance {0}")]
    MissingPrediction(String),
    #[error("instance {0} has no gold labels")]
    MissingGold(String),
}

/// Column name for predictions that produced no usable label. Never a
/// gold value, so it only ever absorbs recall.
pub const UNPARSED: &str = "unparsed";

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Rows are gold classes; columns add the reserved unparsed column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn cell(&self, gold: &str, pred: &str) -> Option<usize> {
        let r = self.rows.iter().position(|l| l == gold)?;
        let c = self.columns.iter().position(|l| l == pred)?;
        Some(self.counts[r][c])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub dimension: Dimension,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
    pub parse_failure_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub report_version: u32,
    pub instance_count: usize,
    pub dimensions: Vec<DimensionReport>,
}

impl EvalReport {
    pub fn dimension(&self, dim: Dimension) -> Option<&DimensionReport> {
        self.dimensions.iter().find(|d| d.dimension == dim)
    }

    pub fn weighted_f1(&self, dim: Dimension) -> Option<f64> {
        self.dimension(dim).map(|d| d.weighted_f1)
    }

    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "instances: {}", self.instance_count).unwrap();
        for d in &self.dimensions {
            writeln!(
                out,
                "{}: weighted_f1 {:.4} (parse failures: {})",
                d.dimension, d.weighted_f1, d.parse_failure_count
            )
            .unwrap();
            for c in &d.per_class {
                writeln!(
                    out,
                    "  {:<12} p {:.4}  r {:.4}  f1 {:.4}  support {}",
                    c.label, c.precision, c.recall, c.f1, c.support
                )
                .unwrap();
            }
        }
        out
    }
}

/// Weighted F1 over explicit class labels: `Σ (support_c / N) * F1_c`,
/// with `F1_c = 0` whenever `P + R = 0`.
pub fn weighted_f1<T: Eq + Hash + std::fmt::Debug>(
    gold: &[T],
    pred: &[T],
    classes: &[T],
) -> Result<f64, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch { gold: gold.len(), pred: pred.len() });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let index: HashMap<&T, usize> = classes.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let lookup = |label: &T| {
        index.get(label).copied().ok_or_else(|| EvalError::UnknownLabel(format!("{label:?}")))
    };

    let k = classes.len();
    let mut tp = vec![0usize; k];
    let mut fp = vec![0usize; k];
    let mut support = vec![0usize; k];
    for (g, p) in gold.iter().zip(pred) {
        let gi = lookup(g)?;
        let pi = lookup(p)?;
        support[gi] += 1;
        if gi == pi {
            tp[gi] += 1;
        } else {
            fp[pi] += 1;
        }
    }
    // Summing support * F1 and dividing once keeps perfect predictions at
    // exactly 1.0 (supports are integers, so the numerator sums exactly).
    let mut total = 0.0;
    for c in 0..k {
        let (precision, recall) = class_pr(tp[c], fp[c], support[c]);
        total += support[c] as f64 * f1_from(precision, recall);
    }
    Ok(total / gold.len() as f64)
}

fn class_pr(tp: usize, fp: usize, support: usize) -> (f64, f64) {
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
    (precision, recall)
}

fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Scores prediction records against gold labels for the given dimensions.
///
/// Every instance must carry gold labels and have exactly one record
/// (matched by instance id).
pub fn evaluate(
    instances: &[RelationInstance],
    records: &[PredictionRecord],
    dims: &[Dimension],
) -> Result<EvalReport, EvalError> {
    if instances.is_empty() {
        return Err(EvalError::Empty);
    }
    let by_id: HashMap<&str, &PredictionRecord> =
        records.iter().map(|r| (r.instance_id.as_str(), r)).collect();

    let mut dimensions = Vec::with_capacity(dims.len());
    for dim in dims {
        let labels: Vec<&'static str> = dim.label_tokens().to_vec();
        let columns: Vec<String> =
            labels.iter().map(|l| l.to_string()).chain([UNPARSED.to_string()]).collect();
        let col_of = |token: &str| columns.iter().position(|c| c == token).expect("known column");

        let mut counts = vec![vec![0usize; columns.len()]; labels.len()];
        let mut gold_tokens = Vec::with_capacity(instances.len());
        let mut pred_tokens = Vec::with_capacity(instances.len());
        let mut parse_failures = 0usize;
        for inst in instances {
            let gold = inst.gold.ok_or_else(|| EvalError::MissingGold(inst.id.clone()))?;
            let record = by_id
                .get(inst.id.as_str())
                .ok_or_else(|| EvalError::MissingPrediction(inst.id.clone()))?;
            let gold_token = gold.get(*dim).token();
            let pred_token = match record.parsed.as_ref().and_then(|m| m.get(dim)) {
                Some(label) => label.token(),
                None => {
                    parse_failures += 1;
                    UNPARSED
                }
            };
            let row = labels.iter().position(|l| *l == gold_token).expect("gold is canonical");
            counts[row][col_of(pred_token)] += 1;
            gold_tokens.push(gold_token);
            pred_tokens.push(pred_token);
        }

        // The unparsed column participates as a class with zero support, so
        // it contributes nothing to the weighted sum.
        let mut class_space: Vec<&str> = labels.clone();
        class_space.push(UNPARSED);
        let wf1 = weighted_f1(&gold_tokens, &pred_tokens, &class_space)?;

        let per_class = labels
            .iter()
            .enumerate()
            .map(|(row, label)| {
                let support: usize = counts[row].iter().sum();
                let tp = counts[row][row];
                let fp: usize = (0..labels.len()).filter(|r| *r != row).map(|r| counts[r][row]).sum();
                let (precision, recall) = class_pr(tp, fp, support);
                ClassMetrics {
                    label: label.to_string(),
                    precision,
                    recall,
                    f1: f1_from(precision, recall),
                    support,
                }
            })
            .collect();

        dimensions.push(DimensionReport {
            dimension: *dim,
            weighted_f1: wf1,
            per_class,
            confusion: ConfusionMatrix {
                rows: labels.iter().map(|l| l.to_string()).collect(),
                columns,
                counts,
            },
            parse_failure_count: parse_failures,
        });
    }
    Ok(EvalReport {
        report_version: REPORT_FORMAT_VERSION,
        instance_count: instances.len(),
        dimensions,
    })
}
