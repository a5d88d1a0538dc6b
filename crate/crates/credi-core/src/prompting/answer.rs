//! Canonical answer lines and response parsing.
//!
//! Answers use the machine-parseable `key=value; ...` form, e.g.
//! `polarity=negative; rel_type=affiliative; hierarchy=senior`. Tokens are
//! ASCII and language-neutral, so the prompt locale never affects parsing.

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;

use crate::corpus::{Dimension, LabelMap, LabelSet, RelationLabel};

use super::PromptMode;

/// A rendered answer: one label per in-scope dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerLine {
    pub labels: LabelMap,
}

impl AnswerLine {
    pub fn joint(set: &LabelSet) -> AnswerLine {
        AnswerLine { labels: set.to_map() }
    }

    pub fn single(dim: Dimension, label: RelationLabel) -> AnswerLine {
        debug_assert_eq!(label.dimension(), dim);
        AnswerLine { labels: [(dim, label)].into_iter().collect() }
    }

    /// The answer a gold-labeled instance should produce under `mode`.
    pub fn for_mode(set: &LabelSet, mode: PromptMode) -> AnswerLine {
        match mode {
            PromptMode::Joint => AnswerLine::joint(set),
            PromptMode::PerDimension(dim) => AnswerLine::single(dim, set.get(dim)),
        }
    }

    /// Canonical text, keys in fixed dimension order.
    pub fn render(&self) -> String {
        self.labels
            .iter()
            .map(|(dim, label)| format!("{}={}", dim.key(), label.token()))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl fmt::Display for AnswerLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Why a model response could not be converted into labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    MissingDimension(Dimension),
    ConflictingValues(Dimension),
    UnknownLabel { dimension: Dimension, token: String },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::MissingDimension(d) => write!(f, "missing dimension {d}"),
            ParseError::ConflictingValues(d) => write!(f, "conflicting values for {d}"),
            ParseError::UnknownLabel { dimension, token } => {
                write!(f, "unknown {dimension} label `{token}`")
            }
        }
    }
}

impl std::error::Error for ParseError {}

fn pair_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(polarity|rel_type|hierarchy)\s*=\s*([A-Za-z]+)").expect("valid regex")
    })
}

/// Extracts labels from arbitrary model output.
///
/// Scans for `key=value` pairs case-insensitively, tolerating surrounding
/// prose. Keys outside the mode's scope are ignored. Every in-scope
/// dimension must be present exactly once (repeats of the same value are
/// tolerated).
pub fn parse_response(text: &str, mode: PromptMode) -> Result<LabelMap, ParseError> {
    let scope = mode.dimensions();
    let mut labels = LabelMap::new();
    for caps in pair_pattern().captures_iter(text) {
        let dim = Dimension::from_key(&caps[1].to_ascii_lowercase()).expect("pattern keys");
        if !scope.contains(&dim) {
            continue;
        }
        let token = caps[2].to_ascii_lowercase();
        let label = RelationLabel::parse_token(dim, &token)
            .ok_or(ParseError::UnknownLabel { dimension: dim, token })?;
        if let Some(prev) = labels.insert(dim, label) {
            if prev != label {
                return Err(ParseError::ConflictingValues(dim));
            }
        }
    }
    for dim in scope {
        if !labels.contains_key(&dim) {
            return Err(ParseError::MissingDimension(dim));
        }
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use crate::corpus::{Hierarchy, Polarity, RelType};

    use super::*;

    fn set(p: Polarity, r: RelType, h: Hierarchy) -> LabelSet {
        LabelSet::new(p, r, h)
    }

    #[test]
    fn joint_answer_renders_in_fixed_order() {
        let line = AnswerLine::joint(&set(Polarity::Negative, RelType::Affiliative, Hierarchy::Senior));
        assert_eq!(line.render(), "polarity=negative; rel_type=affiliative; hierarchy=senior");
    }

    #[test]
    fn joint_round_trip_all_combinations() {
        for p in [Polarity::Positive, Polarity::Neutral, Polarity::Negative] {
            for r in [RelType::Kinship, RelType::Affiliative, RelType::Other] {
                for h in [Hierarchy::Senior, Hierarchy::Peer, Hierarchy::Junior] {
                    let line = AnswerLine::joint(&set(p, r, h));
                    let parsed = parse_response(&line.render(), PromptMode::Joint).unwrap();
                    assert_eq!(parsed, line.labels);
                }
            }
        }
    }

    #[test]
    fn per_dimension_round_trip() {
        for dim in Dimension::ALL {
            for label in dim.labels() {
                let line = AnswerLine::single(dim, label);
                let parsed = parse_response(&line.render(), PromptMode::PerDimension(dim)).unwrap();
                assert_eq!(parsed, line.labels);
            }
        }
    }

    #[test]
    fn tolerates_prose_case_and_key_order() {
        let text = "I think the answer is HIERARCHY=Senior, with rel_type=affiliative.\nPolarity=negative overall.";
        let parsed = parse_response(text, PromptMode::Joint).unwrap();
        assert_eq!(parsed[&Dimension::Polarity].token(), "negative");
        assert_eq!(parsed[&Dimension::RelType].token(), "affiliative");
        assert_eq!(parsed[&Dimension::Hierarchy].token(), "senior");
    }

    #[test]
    fn per_dimension_ignores_other_keys() {
        let text = "polarity=positive; rel_type=kinship; hierarchy=peer";
        let parsed = parse_response(text, PromptMode::PerDimension(Dimension::RelType)).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[&Dimension::RelType].token(), "kinship");
    }

    #[test]
    fn missing_dimension_is_reported() {
        let err = parse_response("polarity=positive; rel_type=other", PromptMode::Joint);
        assert_eq!(err, Err(ParseError::MissingDimension(Dimension::Hierarchy)));
    }

    #[test]
    fn conflicting_values_are_rejected_but_repeats_pass() {
        let err = parse_response(
            "polarity=positive or maybe polarity=negative",
            PromptMode::PerDimension(Dimension::Polarity),
        );
        assert_eq!(err, Err(ParseError::ConflictingValues(Dimension::Polarity)));

        let ok = parse_response(
            "polarity=positive; in short, polarity=positive",
            PromptMode::PerDimension(Dimension::Polarity),
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn unknown_label_is_rejected() {
        let err = parse_response("polarity=friendly", PromptMode::PerDimension(Dimension::Polarity));
        assert_eq!(
            err,
            Err(ParseError::UnknownLabel { dimension: Dimension::Polarity, token: "friendly".into() })
        );
        // A real token bound to the wrong key is equally unknown.
        let err = parse_response("polarity=kinship", PromptMode::PerDimension(Dimension::Polarity));
        assert!(matches!(err, Err(ParseError::UnknownLabel { .. })));
    }

    #[test]
    fn empty_text_is_missing_not_a_crash() {
        let err = parse_response("", PromptMode::Joint);
        assert_eq!(err, Err(ParseError::MissingDimension(Dimension::Polarity)));
    }
}
