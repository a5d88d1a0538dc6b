//! End-to-end orchestration: retrieve exemplars, render prompts, call the
//! backend, score the predictions.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::corpus::{CorpusError, Dataset, Dimension, LabelSet};
use crate::evaluation::{evaluate, AblationMode, EvalError, EvalReport};
use crate::inference::{predict_batch, Backend, BackendError, PredictionRecord};
use crate::prompting::{render_prompt, PromptConfig, PromptMode};
use crate::retrieval::{
    build_index, embedding_text, select_exemplars, Embedder, RetrievalError, RetrievalIndex,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Results of one extraction run over an evaluation set.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub predictions: Vec<PredictionRecord>,
    pub report: EvalReport,
    /// Training index, present when exemplars were retrieved. Callers may
    /// persist it for reuse.
    pub index: Option<RetrievalIndex>,
}

/// Runs extraction over every instance of `eval`.
///
/// Zero-shot configs skip retrieval entirely; otherwise `index` is reused
/// when given (it must match the embedder) or built from `train`. With
/// `exclude_self` the query instance never appears among its own
/// exemplars, which makes leave-one-out runs over the training set sound.
#[allow(clippy::too_many_arguments)]
pub fn run_extraction(
    train: &Dataset,
    eval: &Dataset,
    cfg: &PromptConfig,
    embedder: &dyn Embedder,
    backend: &dyn Backend,
    parallelism: usize,
    exclude_self: bool,
    index: Option<&RetrievalIndex>,
) -> Result<RunOutput, PipelineError> {
    cfg.validate()?;
    let (index, owned_index) = if cfg.exemplar_count == 0 {
        (None, None)
    } else {
        match index {
            Some(idx) => {
                check_index(idx, embedder)?;
                (Some(idx), None)
            }
            None => {
                let built = build_index(train, cfg, embedder)?;
                (None, Some(built))
            }
        }
    };
    let active_index = index.or(owned_index.as_ref());

    let mut prompts = Vec::with_capacity(eval.instances.len());
    for (idx, inst) in eval.instances.iter().enumerate() {
        let exemplars = match active_index {
            Some(retrieval_index) => {
                let query = embedder.embed(&embedding_text(eval, idx, cfg))?;
                select_exemplars(
                    retrieval_index,
                    &query,
                    &inst.id,
                    cfg.exemplar_count,
                    train,
                    cfg,
                    exclude_self,
                )?
            }
            None => Vec::new(),
        };
        let unit = eval.unit(&inst.unit_id).ok_or_else(|| CorpusError::DanglingReference {
            instance_id: inst.id.clone(),
            unit_id: inst.unit_id.clone(),
        })?;
        prompts.push((inst.id.clone(), render_prompt(inst, unit, cfg, exemplars)?));
    }

    let predictions = predict_batch(backend, &prompts, cfg.mode, parallelism)?;
    let report = evaluate(&eval.instances, &predictions, &cfg.mode.dimensions())?;
    Ok(RunOutput { predictions, report, index: owned_index })
}

fn check_index(index: &RetrievalIndex, embedder: &dyn Embedder) -> Result<(), RetrievalError> {
    if index.dim != embedder.dim() {
        return Err(RetrievalError::DimensionMismatch {
            expected: embedder.dim(),
            got: index.dim,
        });
    }
    if index.embedder != embedder.name() {
        return Err(RetrievalError::Schema(format!(
            "index was built with embedder {}, current embedder is {}",
            index.embedder,
            embedder.name()
        )));
    }
    Ok(())
}

/// Runs one ablation cell. The per-dimension mode performs three separate
/// runs and stitches their reports together in fixed dimension order.
#[allow(clippy::too_many_arguments)]
pub fn run_ablation_cell(
    mode: AblationMode,
    train: &Dataset,
    eval: &Dataset,
    cfg: &PromptConfig,
    embedder: &dyn Embedder,
    backend: &dyn Backend,
    parallelism: usize,
    exclude_self: bool,
) -> Result<EvalReport, PipelineError> {
    match mode {
        AblationMode::Joint => {
            let cfg = PromptConfig { mode: PromptMode::Joint, ..cfg.clone() };
            Ok(run_extraction(train, eval, &cfg, embedder, backend, parallelism, exclude_self, None)?
                .report)
        }
        AblationMode::PerDimensionAll => {
            let mut merged: Option<EvalReport> = None;
            for dim in Dimension::ALL {
                let cfg = PromptConfig { mode: PromptMode::PerDimension(dim), ..cfg.clone() };
                let report =
                    run_extraction(train, eval, &cfg, embedder, backend, parallelism, exclude_self, None)?
                        .report;
                match &mut merged {
                    Some(acc) => acc.dimensions.extend(report.dimensions),
                    None => merged = Some(report),
                }
            }
            Ok(merged.expect("three dimensions"))
        }
    }
}

/// Copies parsed predictions onto matching instances. Only complete label
/// maps (all three dimensions) become a `predicted` set; returns how many
/// instances were filled.
pub fn merge_predictions(ds: &mut Dataset, records: &[PredictionRecord]) -> usize {
    let mut filled = 0;
    for record in records {
        let Some(parsed) = &record.parsed else { continue };
        let Some(set) = LabelSet::from_map(parsed) else { continue };
        for inst in ds.instances.iter_mut().filter(|i| i.id == record.instance_id) {
            inst.predicted = Some(set);
            filled += 1;
        }
    }
    filled
}

/// Writes prediction records as JSONL, one record per line.
pub fn save_predictions(
    records: &[PredictionRecord],
    path: impl AsRef<Path>,
) -> Result<(), PipelineError> {
    let mut file = std::fs::File::create(path).map_err(CorpusError::Io)?;
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| CorpusError::Schema { line: 0, detail: e.to_string() })?;
        writeln!(file, "{line}").map_err(CorpusError::Io)?;
    }
    Ok(())
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>, PipelineError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CorpusError::FileNotFound(path.to_path_buf()),
        _ => CorpusError::Io(e),
    })?;
    let mut records = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(CorpusError::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Schema { line: lineno + 1, detail: e.to_string() })?;
        records.push(record);
    }
    Ok(records)
}
