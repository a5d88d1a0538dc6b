//! Dialogue segmentation and textual rendering variants.
//!
//! Two renderings of a [`DialogueUnit`] feed the prompt builder:
//!
//! - expanded: every quote is rewritten as an explicit "A said to B"
//!   line so the model sees the interaction structure;
//! - basic: the raw context with no speaker reconstruction, used as the
//!   degraded input variant in ablations.

mod segmenter;

pub use segmenter::{
    segment_dialogue_chains, Segmentation, SegmentWarning, SegmenterConfig,
};

use serde::{Deserialize, Serialize};

use crate::corpus::DialogueUnit;

/// Prompt language for rendered dialogue lines and instructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Locale {
    #[default]
    Zh,
    En,
}

/// Which dialogue rendering feeds the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DialogueVariant {
    #[default]
    Expanded,
    Basic,
}

impl std::fmt::Display for DialogueVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DialogueVariant::Expanded => "expanded",
            DialogueVariant::Basic => "basic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DialogueLine {
    Narration(String),
    AttributedQuote {
        speaker: String,
        addressee: Option<String>,
        text: String,
    },
}

/// A dialogue unit decomposed into ordered narration and quote lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedDialogue {
    pub lines: Vec<DialogueLine>,
}

/// Delimiters stripped from narration slices adjacent to quote spans.
const KNOWN_DELIMITERS: [(&str, &str); 3] = [("“", "”"), ("「", "」"), ("\"", "\"")];

/// Decomposes a unit into narration and attributed-quote lines.
///
/// Narration is everything of `context` outside the quote spans, split at
/// the spans, with adjacent quote delimiters stripped. Quote order is
/// preserved.
pub fn build_expanded_dialogue(unit: &DialogueUnit) -> ExpandedDialogue {
    fn push_narration(lines: &mut Vec<DialogueLine>, slice: &str) {
        let mut s = slice;
        for (open, close) in KNOWN_DELIMITERS {
            if let Some(rest) = s.strip_prefix(close) {
                s = rest;
            }
            if let Some(rest) = s.strip_suffix(open) {
                s = rest;
            }
        }
        let s = s.trim();
        if !s.is_empty() {
            lines.push(DialogueLine::Narration(s.to_string()));
        }
    }

    let mut lines = Vec::new();
    let mut cursor = 0usize;
    for q in &unit.quotes {
        let (start, end) = q.span;
        if start >= cursor {
            push_narration(&mut lines, &unit.context[cursor..start]);
            cursor = end;
        }
        lines.push(DialogueLine::AttributedQuote {
            speaker: q.speaker.clone(),
            addressee: q.addressee.clone(),
            text: q.utterance.clone(),
        });
    }
    if cursor < unit.context.len() {
        push_narration(&mut lines, &unit.context[cursor..]);
    }
    ExpandedDialogue { lines }
}

impl ExpandedDialogue {
    /// Renders lines in order, one per text line.
    pub fn render(&self, locale: Locale) -> String {
        let rendered: Vec<String> = self
            .lines
            .iter()
            .map(|line| match line {
                DialogueLine::Narration(text) => text.clone(),
                DialogueLine::AttributedQuote { speaker, addressee, text } => {
                    match (locale, addressee) {
                        (Locale::Zh, Some(a)) => format!("{speaker}对{a}说：“{text}”"),
                        (Locale::Zh, None) => format!("{speaker}说：“{text}”"),
                        (Locale::En, Some(a)) => format!("{speaker} said to {a}: \"{text}\""),
                        (Locale::En, None) => format!("{speaker} said: \"{text}\""),
                    }
                }
            })
            .collect();
        rendered.join("\n")
    }
}

/// The raw-context rendering: no speaker reconstruction.
///
/// Utterances whose span does not slice to the stored text (possible in
/// hand-written corpora) are appended so every utterance appears verbatim.
pub fn build_basic_dialogue(unit: &DialogueUnit) -> String {
    let mut out = unit.context.clone();
    for q in &unit.quotes {
        if unit.context.get(q.span.0..q.span.1) != Some(q.utterance.as_str()) {
            out.push('\n');
            out.push_str(&q.utterance);
        }
    }
    out
}

/// The configured rendering of a unit; the common entry point for
/// prompting and retrieval.
pub fn dialogue_text(unit: &DialogueUnit, variant: DialogueVariant, locale: Locale) -> String {
    match variant {
        DialogueVariant::Expanded => build_expanded_dialogue(unit).render(locale),
        DialogueVariant::Basic => build_basic_dialogue(unit),
    }
}

#[cfg(test)]
mod tests {
    use crate::corpus::Quote;

    use super::*;

    fn two_quote_unit() -> DialogueUnit {
        let context = "沈青崖紧了紧衣襟。“山路难行，不如回头。”陆明霞摇头：“回头便前功尽弃了。”".to_string();
        let u1 = "山路难行，不如回头。";
        let u2 = "回头便前功尽弃了。";
        let s1 = context.find(u1).unwrap();
        let s2 = context.find(u2).unwrap();
        DialogueUnit {
            id: "u1".into(),
            novel_id: "t".into(),
            context,
            quotes: vec![
                Quote {
                    speaker: "沈青崖".into(),
                    addressee: Some("陆明霞".into()),
                    utterance: u1.into(),
                    span: (s1, s1 + u1.len()),
                },
                Quote {
                    speaker: "陆明霞".into(),
                    addressee: Some("沈青崖".into()),
                    utterance: u2.into(),
                    span: (s2, s2 + u2.len()),
                },
            ],
        }
    }

    #[test]
    fn expanded_renders_speaker_addressee_template() {
        let text = dialogue_text(&two_quote_unit(), DialogueVariant::Expanded, Locale::Zh);
        assert!(text.contains("沈青崖对陆明霞说：“山路难行，不如回头。”"), "{text}");
        assert!(text.contains("陆明霞对沈青崖说：“回头便前功尽弃了。”"), "{text}");
    }

    #[test]
    fn expanded_without_addressee_drops_the_clause() {
        let mut unit = two_quote_unit();
        unit.quotes[0].addressee = None;
        let text = build_expanded_dialogue(&unit).render(Locale::Zh);
        assert!(text.contains("沈青崖说：“山路难行，不如回头。”"), "{text}");
        assert!(!text.contains("沈青崖对"), "{text}");
    }

    #[test]
    fn english_locale_uses_said_to() {
        let text = build_expanded_dialogue(&two_quote_unit()).render(Locale::En);
        assert!(text.contains("沈青崖 said to 陆明霞: \"山路难行，不如回头。\""), "{text}");
    }

    #[test]
    fn narration_is_preserved_in_order() {
        let dialogue = build_expanded_dialogue(&two_quote_unit());
        match &dialogue.lines[0] {
            DialogueLine::Narration(text) => assert_eq!(text, "沈青崖紧了紧衣襟。"),
            other => panic!("expected narration first, got {other:?}"),
        }
        let quote_indices: Vec<usize> = dialogue
            .lines
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, DialogueLine::AttributedQuote { .. }))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(quote_indices.len(), 2);
        assert!(quote_indices[0] < quote_indices[1]);
    }

    #[test]
    fn basic_keeps_utterances_and_skips_templates() {
        let unit = two_quote_unit();
        let text = build_basic_dialogue(&unit);
        for q in &unit.quotes {
            assert!(text.contains(q.utterance.as_str()));
            assert_eq!(text.matches(q.utterance.as_str()).count(), 1);
        }
        assert!(!text.contains("对陆明霞说"));
    }

    #[test]
    fn basic_appends_utterance_when_span_mismatches() {
        let mut unit = two_quote_unit();
        unit.quotes[0].utterance = "改过的话。".into();
        let text = build_basic_dialogue(&unit);
        assert!(text.ends_with("改过的话。"));
    }

    #[test]
    fn variants_differ_for_any_quoted_unit() {
        let unit = two_quote_unit();
        assert_ne!(
            dialogue_text(&unit, DialogueVariant::Expanded, Locale::Zh),
            dialogue_text(&unit, DialogueVariant::Basic, Locale::Zh),
        );
    }

    #[test]
    fn rendering_is_deterministic() {
        let unit = two_quote_unit();
        let a = dialogue_text(&unit, DialogueVariant::Expanded, Locale::Zh);
        let b = dialogue_text(&unit, DialogueVariant::Expanded, Locale::Zh);
        assert_eq!(a, b);
    }
}
