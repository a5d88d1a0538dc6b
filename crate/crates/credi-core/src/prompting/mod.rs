//! Prompt construction, rendering, and response parsing.
//!
//! Prompts are built jointly over all three dimensions by default; the
//! per-dimension mode exists for ablation. Exemplars come from the
//! retrieval module and are rendered as DIALOGUE/TARGET/ANSWER blocks
//! ahead of the query block.

mod answer;
mod templates;

pub use answer::{parse_response, AnswerLine, ParseError};
pub use templates::{default_template, DEFAULT_TEMPLATE_EN, DEFAULT_TEMPLATE_ZH};

use crate::corpus::{CorpusError, DialogueUnit, Dimension, RelationInstance};
use crate::dialogue::{dialogue_text, DialogueVariant, Locale};

/// Which dimensions one prompt asks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptMode {
    /// All three dimensions in one answer line (the default).
    Joint,
    /// A single dimension; used by the ablation grid.
    PerDimension(Dimension),
}

impl PromptMode {
    pub fn dimensions(&self) -> Vec<Dimension> {
        match self {
            PromptMode::Joint => Dimension::ALL.to_vec(),
            PromptMode::PerDimension(dim) => vec![*dim],
        }
    }
}

impl std::fmt::Display for PromptMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PromptMode::Joint => f.write_str("joint"),
            PromptMode::PerDimension(dim) => write!(f, "per-{}", dim.key()),
        }
    }
}

pub const MAX_EXEMPLARS: usize = 16;

pub const PLACEHOLDER_DIALOGUE: &str = "{DIALOGUE}";
pub const PLACEHOLDER_TARGET_PAIR: &str = "{TARGET_PAIR}";
pub const PLACEHOLDER_CANDIDATE_LABELS: &str = "{CANDIDATE_LABELS}";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptConfig {
    pub mode: PromptMode,
    pub dialogue_variant: DialogueVariant,
    /// Number of retrieved exemplars (k).
    pub exemplar_count: usize,
    pub locale: Locale,
    /// Instruction template; see [`default_template`] for the placeholder
    /// contract.
    pub template: String,
}

impl PromptConfig {
    pub fn new(
        mode: PromptMode,
        dialogue_variant: DialogueVariant,
        exemplar_count: usize,
        locale: Locale,
    ) -> PromptConfig {
        PromptConfig {
            mode,
            dialogue_variant,
            exemplar_count,
            locale,
            template: default_template(locale).to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.exemplar_count > MAX_EXEMPLARS {
            return Err(CorpusError::Prompt(format!(
                "exemplar_count {} exceeds the maximum {MAX_EXEMPLARS}",
                self.exemplar_count
            )));
        }
        split_template(&self.template).map(|_| ())
    }

    /// Zero-shot copy of this config; fine-tune export renders without
    /// exemplars.
    pub fn zero_shot(&self) -> PromptConfig {
        PromptConfig { exemplar_count: 0, ..self.clone() }
    }
}

/// (instruction part, block part) of a template.
///
/// The block part begins at the line containing `{DIALOGUE}`. The
/// instruction part must hold `{CANDIDATE_LABELS}`; the block part must
/// hold `{TARGET_PAIR}`.
fn split_template(template: &str) -> Result<(&str, &str), CorpusError> {
    let missing = |name: &str| CorpusError::Prompt(format!("template lacks the {name} placeholder"));
    let pos = template.find(PLACEHOLDER_DIALOGUE).ok_or_else(|| missing(PLACEHOLDER_DIALOGUE))?;
    let block_start = template[..pos].rfind('\n').map_or(0, |i| i + 1);
    let head = template[..block_start].trim_end();
    let block = template[block_start..].trim_end();
    if !head.contains(PLACEHOLDER_CANDIDATE_LABELS) {
        return Err(CorpusError::Prompt(format!(
            "{PLACEHOLDER_CANDIDATE_LABELS} must appear before the {PLACEHOLDER_DIALOGUE} line"
        )));
    }
    if !block.contains(PLACEHOLDER_TARGET_PAIR) {
        return Err(CorpusError::Prompt(format!(
            "{PLACEHOLDER_TARGET_PAIR} must appear on or after the {PLACEHOLDER_DIALOGUE} line"
        )));
    }
    Ok((head, block))
}

/// One retrieved exemplar ready for rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exemplar {
    pub dialogue: String,
    pub subject: String,
    pub object: String,
    pub answer: AnswerLine,
}

/// A fully resolved prompt, ready to render deterministically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSpec {
    pub instruction: String,
    pub block_template: String,
    pub exemplars: Vec<Exemplar>,
    pub query_dialogue: String,
    pub query_subject: String,
    pub query_object: String,
    pub candidate_labels: Vec<(Dimension, Vec<String>)>,
}

fn candidate_labels(mode: PromptMode) -> Vec<(Dimension, Vec<String>)> {
    mode.dimensions()
        .into_iter()
        .map(|dim| (dim, dim.label_tokens().iter().map(|t| t.to_string()).collect()))
        .collect()
}

fn render_candidates(lists: &[(Dimension, Vec<String>)]) -> String {
    lists
        .iter()
        .map(|(dim, tokens)| format!("{}: {}", dim.key(), tokens.join(" | ")))
        .collect::<Vec<_>>()
        .join("; ")
}

fn target_pair(subject: &str, object: &str) -> String {
    format!("{subject} -> {object}")
}

/// Builds a prompt spec for one instance.
///
/// `exemplars` must already be selected (see the retrieval module); pass an
/// empty slice for zero-shot.
pub fn build_prompt(
    instance: &RelationInstance,
    unit: &DialogueUnit,
    cfg: &PromptConfig,
    exemplars: Vec<Exemplar>,
) -> Result<PromptSpec, CorpusError> {
    if unit.id != instance.unit_id {
        return Err(CorpusError::Prompt(format!(
            "instance {} belongs to unit {}, got unit {}",
            instance.id, instance.unit_id, unit.id
        )));
    }
    let (head, block) = split_template(&cfg.template)?;
    let candidates = candidate_labels(cfg.mode);
    Ok(PromptSpec {
        instruction: head.replace(PLACEHOLDER_CANDIDATE_LABELS, &render_candidates(&candidates)),
        block_template: block.to_string(),
        exemplars,
        query_dialogue: dialogue_text(unit, cfg.dialogue_variant, cfg.locale),
        query_subject: instance.subject.clone(),
        query_object: instance.object.clone(),
        candidate_labels: candidates,
    })
}

impl PromptSpec {
    fn render_block(&self, dialogue: &str, subject: &str, object: &str) -> String {
        self.block_template
            .replace(PLACEHOLDER_DIALOGUE, dialogue)
            .replace(PLACEHOLDER_TARGET_PAIR, &target_pair(subject, object))
    }

    /// Deterministic full prompt text: instruction, exemplar blocks with
    /// answers, query block ending in a bare `ANSWER:`.
    pub fn render(&self) -> String {
        let mut sections = Vec::with_capacity(self.exemplars.len() + 2);
        sections.push(self.instruction.clone());
        for ex in &self.exemplars {
            let block = self.render_block(&ex.dialogue, &ex.subject, &ex.object);
            sections.push(format!("{block}\nANSWER: {}", ex.answer.render()));
        }
        let query = self.render_block(&self.query_dialogue, &self.query_subject, &self.query_object);
        sections.push(format!("{query}\nANSWER:"));
        sections.join("\n\n")
    }
}

/// Convenience wrapper: render the prompt for an instance in one call.
pub fn render_prompt(
    instance: &RelationInstance,
    unit: &DialogueUnit,
    cfg: &PromptConfig,
    exemplars: Vec<Exemplar>,
) -> Result<String, CorpusError> {
    Ok(build_prompt(instance, unit, cfg, exemplars)?.render())
}
