//! Rule-based dialogue chain segmentation.
//!
//! The pass is deterministic: delimiter scanning finds quotes, paragraph
//! proximity groups them into chains, and attribution uses roster names
//! adjacent to attribution verbs, with continuation and alternation
//! fallbacks. Attribution accuracy is a known limitation of the rule-based
//! approach; unattributable quotes are dropped with a warning rather than
//! guessed.

use std::collections::BTreeSet;
use std::fmt;

use regex::Regex;

use crate::corpus::{CorpusError, DialogueUnit, Quote};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmenterConfig {
    /// Open/close delimiter pairs recognized as quotes.
    pub quote_delimiters: Vec<(String, String)>,
    /// Cue words marking speech attribution, e.g. 道 / 说道 / said.
    pub attribution_verbs: Vec<String>,
    /// Narration paragraphs tolerated between quoted paragraphs of one chain.
    pub max_gap_paragraphs: usize,
    /// Paragraphs matching this regex break chains unconditionally.
    pub chapter_marker: Option<String>,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            quote_delimiters: vec![
                ("“".into(), "”".into()),
                ("「".into(), "」".into()),
            ],
            attribution_verbs: ["说道", "喝道", "叫道", "道", "说"]
                .into_iter()
                .map(String::from)
                .collect(),
            max_gap_paragraphs: 2,
            chapter_marker: None,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.max_gap_paragraphs < 1 {
            return Err(CorpusError::Prompt("max_gap_paragraphs must be >= 1".into()));
        }
        let mut seen = BTreeSet::new();
        for (open, close) in &self.quote_delimiters {
            if open.is_empty() || close.is_empty() {
                return Err(CorpusError::Prompt("empty quote delimiter".into()));
            }
            if !seen.insert(open.clone()) {
                return Err(CorpusError::Prompt(format!("duplicate quote delimiter {open}")));
            }
        }
        if let Some(pattern) = &self.chapter_marker {
            Regex::new(pattern)
                .map_err(|e| CorpusError::Prompt(format!("chapter_marker: {e}")))?;
        }
        Ok(())
    }
}

/// Non-fatal findings attached to a segmentation result. Positions are
/// byte offsets into the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentWarning {
    UnbalancedQuotes { position: usize },
    UnattributedQuote { position: usize },
}

impl fmt::Display for SegmentWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentWarning::UnbalancedQuotes { position } => {
                write!(f, "unbalanced quote delimiter at byte {position}")
            }
            SegmentWarning::UnattributedQuote { position } => {
                write!(f, "dropped unattributable quote at byte {position}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub units: Vec<DialogueUnit>,
    pub warnings: Vec<SegmentWarning>,
}

/// One quote found inside a paragraph; offsets are paragraph-relative and
/// exclude the delimiters.
struct RawQuote {
    utt_start: usize,
    utt_end: usize,
    open_len: usize,
    close_len: usize,
}

struct Paragraph<'a> {
    text: &'a str,
    /// Byte offset of the paragraph in the source text.
    offset: usize,
    quotes: Vec<RawQuote>,
    chapter_break: bool,
}

/// Segments novel text into dialogue units with attributed quotes.
///
/// Unit ids are `{novel_id}-u0001`, numbered in document order.
pub fn segment_dialogue_chains(
    text: &str,
    roster: &BTreeSet<String>,
    cfg: &SegmenterConfig,
    novel_id: &str,
) -> Segmentation {
    let mut warnings = Vec::new();
    let chapter_re = cfg
        .chapter_marker
        .as_deref()
        .and_then(|p| Regex::new(p).ok());

    // Longest first so a name containing another name wins, likewise verbs.
    let mut names: Vec<&str> = roster.iter().map(String::as_str).collect();
    names.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    let mut verbs: Vec<&str> = cfg.attribution_verbs.iter().map(String::as_str).collect();
    verbs.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));

    let paragraphs = collect_paragraphs(text, cfg, chapter_re.as_ref(), &mut warnings);

    let mut units = Vec::new();
    for chain in chains(&paragraphs, cfg.max_gap_paragraphs) {
        if let Some(unit) = build_unit(
            &paragraphs[chain.0..=chain.1],
            &names,
            &verbs,
            novel_id,
            units.len() + 1,
            &mut warnings,
        ) {
            units.push(unit);
        }
    }
    Segmentation { units, warnings }
}

fn collect_paragraphs<'a>(
    text: &'a str,
    cfg: &SegmenterConfig,
    chapter_re: Option<&Regex>,
    warnings: &mut Vec<SegmentWarning>,
) -> Vec<Paragraph<'a>> {
    let mut paragraphs = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let body = line.trim_end_matches(['\n', '\r']);
        let trimmed = body.trim();
        if !trimmed.is_empty() {
            let start = offset + (body.len() - body.trim_start().len());
            paragraphs.push(Paragraph {
                text: trimmed,
                offset: start,
                quotes: scan_quotes(trimmed, start, &cfg.quote_delimiters, warnings),
                chapter_break: chapter_re.is_some_and(|re| re.is_match(trimmed)),
            });
        }
        offset += line.len();
    }
    paragraphs
}

/// Finds maximal delimiter-balanced quote spans in one paragraph.
fn scan_quotes(
    para: &str,
    para_offset: usize,
    delimiters: &[(String, String)],
    warnings: &mut Vec<SegmentWarning>,
) -> Vec<RawQuote> {
    let mut quotes = Vec::new();
    let mut pos = 0;
    'outer: while pos < para.len() {
        for (open, close) in delimiters {
            if para[pos..].starts_with(open.as_str()) {
                let utt_start = pos + open.len();
                match para[utt_start..].find(close.as_str()) {
                    Some(rel) => {
                        let utt_end = utt_start + rel;
                        if utt_end > utt_start {
                            quotes.push(RawQuote {
                                utt_start,
                                utt_end,
                                open_len: open.len(),
                                close_len: close.len(),
                            });
                        }
                        pos = utt_end + close.len();
                        continue 'outer;
                    }
                    None => {
                        warnings.push(SegmentWarning::UnbalancedQuotes {
                            position: para_offset + pos,
                        });
                        break 'outer;
                    }
                }
            }
        }
        pos += para[pos..].chars().next().expect("char boundary").len_utf8();
    }
    quotes
}

/// Paragraph index ranges (inclusive) forming dialogue chains.
fn chains(paragraphs: &[Paragraph], max_gap: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (i, p) in paragraphs.iter().enumerate() {
        if p.quotes.is_empty() {
            continue;
        }
        let extend = match out.last() {
            Some(&(_, last)) if i > last => {
                let gap = i - last - 1;
                gap <= max_gap
                    && !paragraphs[last + 1..i].iter().any(|q| q.chapter_break)
                    && !p.chapter_break
            }
            _ => false,
        };
        if extend {
            out.last_mut().expect("just matched").1 = i;
        } else {
            out.push((i, i));
        }
    }
    out
}

fn build_unit(
    chain: &[Paragraph],
    names: &[&str],
    verbs: &[&str],
    novel_id: &str,
    unit_no: usize,
    warnings: &mut Vec<SegmentWarning>,
) -> Option<DialogueUnit> {
    // Context is the chain's paragraphs joined by newlines; record each
    // paragraph's offset within it for span arithmetic.
    let mut context = String::new();
    let mut para_starts = Vec::with_capacity(chain.len());
    for p in chain {
        if !context.is_empty() {
            context.push('\n');
        }
        para_starts.push(context.len());
        context.push_str(p.text);
    }

    // Gather quotes with paragraph-local attribution evidence.
    struct Candidate {
        span: (usize, usize),
        utterance: String,
        source_pos: usize,
        speaker: Option<String>,
        continues_previous: bool,
    }
    let mut candidates: Vec<Candidate> = Vec::new();
    for (pi, p) in chain.iter().enumerate() {
        for (qi, q) in p.quotes.iter().enumerate() {
            let pre_end = q.utt_start - q.open_len;
            let pre_start = if qi > 0 {
                let prev = &p.quotes[qi - 1];
                prev.utt_end + prev.close_len
            } else {
                0
            };
            let post_start = q.utt_end + q.close_len;
            let post_end = if qi + 1 < p.quotes.len() {
                let next = &p.quotes[qi + 1];
                next.utt_start - next.open_len
            } else {
                p.text.len()
            };
            let pre = &p.text[pre_start..pre_end];
            let post = &p.text[post_start..post_end];

            let speaker = attribute_pre(pre, names, verbs)
                .or_else(|| attribute_post(post, names, verbs))
                .map(String::from);
            candidates.push(Candidate {
                span: (para_starts[pi] + q.utt_start, para_starts[pi] + q.utt_end),
                utterance: p.text[q.utt_start..q.utt_end].to_string(),
                source_pos: p.offset + q.utt_start,
                speaker,
                continues_previous: qi > 0 && pre.trim().is_empty(),
            });
        }
    }

    // Continuation: a bare quote directly after another quote in the same
    // paragraph keeps that quote's speaker.
    for i in 1..candidates.len() {
        if candidates[i].speaker.is_none() && candidates[i].continues_previous {
            candidates[i].speaker = candidates[i - 1].speaker.clone();
        }
    }

    // Alternation: in a two-party chain, bare quotes swap between the
    // parties, seeded by the nearest attributed neighbor.
    let parties: BTreeSet<String> =
        candidates.iter().filter_map(|c| c.speaker.clone()).collect();
    if parties.len() == 2 {
        let pair: Vec<&String> = parties.iter().collect();
        let other = |s: &str| {
            if s == pair[0] { pair[1].clone() } else { pair[0].clone() }
        };
        loop {
            let mut changed = false;
            for i in 0..candidates.len() {
                if candidates[i].speaker.is_some() {
                    continue;
                }
                let inferred = if i > 0 {
                    candidates[i - 1].speaker.as_deref().map(&other)
                } else {
                    None
                }
                .or_else(|| {
                    candidates
                        .get(i + 1)
                        .and_then(|c| c.speaker.as_deref())
                        .map(&other)
                });
                if let Some(s) = inferred {
                    candidates[i].speaker = Some(s);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    let mut quotes = Vec::new();
    for c in candidates {
        match c.speaker {
            Some(speaker) => {
                let addressee = (parties.len() == 2)
                    .then(|| parties.iter().find(|p| **p != speaker).cloned())
                    .flatten();
                quotes.push(Quote {
                    speaker,
                    addressee,
                    utterance: c.utterance,
                    span: c.span,
                });
            }
            None => warnings.push(SegmentWarning::UnattributedQuote { position: c.source_pos }),
        }
    }
    if quotes.is_empty() {
        return None;
    }
    let unit = DialogueUnit {
        id: format!("{novel_id}-u{unit_no:04}"),
        novel_id: novel_id.to_string(),
        context,
        quotes,
    };
    debug_assert!(unit
        .quotes
        .iter()
        .all(|q| unit.context[q.span.0..q.span.1] == q.utterance));
    Some(unit)
}

/// Chars a verb may sit behind at the end of a pre-segment, e.g. the colon
/// in "沈青崖道：".
const TRAILING_PUNCT: &[char] = &['：', ':', '，', ',', '、', '。', ' ', '\u{3000}'];
const LEADING_PUNCT: &[char] = &['，', ',', '。', '：', ':', '！', '？', ' ', '\u{3000}'];

/// Chars tolerated between a name and its verb ("沈青崖冷冷地道").
const MAX_NAME_VERB_GAP: usize = 4;

/// Attribution from the text before the quote: segment must end with a verb
/// closely preceded by a roster name. Returns the name nearest the verb.
fn attribute_pre<'a>(segment: &str, names: &[&'a str], verbs: &[&str]) -> Option<&'a str> {
    let trimmed = segment.trim_end().trim_end_matches(TRAILING_PUNCT);
    let verb = verbs.iter().find(|v| trimmed.ends_with(**v))?;
    let before = &trimmed[..trimmed.len() - verb.len()];
    let mut best: Option<(usize, &str)> = None;
    for name in names {
        if let Some(pos) = before.rfind(name) {
            let end = pos + name.len();
            if before[end..].chars().count() <= MAX_NAME_VERB_GAP
                && best.is_none_or(|(e, _)| end > e)
            {
                best = Some((end, name));
            }
        }
    }
    best.map(|(_, name)| name)
}

/// Attribution from the text after the quote: segment must start with a
/// roster name soon followed by a verb ("”沈青崖道。").
fn attribute_post<'a>(segment: &str, names: &[&'a str], verbs: &[&str]) -> Option<&'a str> {
    let stripped = segment.trim_start().trim_start_matches(LEADING_PUNCT);
    for name in names {
        if let Some(after) = stripped.strip_prefix(name) {
            let mut rest = after;
            for _ in 0..=MAX_NAME_VERB_GAP {
                if verbs.iter().any(|v| rest.starts_with(*v)) {
                    return Some(name);
                }
                match rest.chars().next() {
                    Some(c) => rest = &rest[c.len_utf8()..],
                    None => break,
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roster(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn segment(text: &str, names: &[&str]) -> Segmentation {
        segment_dialogue_chains(text, &roster(names), &SegmenterConfig::default(), "t")
    }

    #[test]
    fn attributes_verb_cued_exchange() {
        let text = "沈青崖喝道：“这一掌你接得住么？”陆明霞说道：“接不住也要接。”";
        let seg = segment(text, &["沈青崖", "陆明霞"]);
        assert_eq!(seg.units.len(), 1);
        let unit = &seg.units[0];
        assert_eq!(unit.quotes.len(), 2);
        assert_eq!(unit.quotes[0].speaker, "沈青崖");
        assert_eq!(unit.quotes[0].addressee.as_deref(), Some("陆明霞"));
        assert_eq!(unit.quotes[1].speaker, "陆明霞");
        assert_eq!(unit.quotes[1].addressee.as_deref(), Some("沈青崖"));
        assert!(seg.warnings.is_empty());
    }

    #[test]
    fn no_delimiters_yields_no_units() {
        let seg = segment("他们一路无话，直到天明。", &["沈青崖"]);
        assert!(seg.units.is_empty());
        assert!(seg.warnings.is_empty());
    }

    #[test]
    fn gap_beyond_threshold_splits_chains() {
        let text = "“先走。”沈青崖道。\n山风渐紧。\n众人下了山。\n过了三日。\n“到了。”沈青崖道。";
        let seg = segment(text, &["沈青崖"]);
        assert_eq!(seg.units.len(), 2, "three narration paragraphs exceed the default gap");

        let close = "“先走。”沈青崖道。\n山风渐紧。\n“到了。”沈青崖道。";
        let seg = segment(close, &["沈青崖"]);
        assert_eq!(seg.units.len(), 1);
        assert_eq!(seg.units[0].quotes.len(), 2);
    }

    #[test]
    fn post_quote_attribution_works() {
        let text = "“想不到是你。”程远桥冷冷地道。";
        let seg = segment(text, &["程远桥"]);
        assert_eq!(seg.units.len(), 1);
        assert_eq!(seg.units[0].quotes[0].speaker, "程远桥");
    }

    #[test]
    fn alternation_fills_two_party_chain() {
        let text = "沈青崖道：“你来了。”\n陆明霞道：“我来了。”\n“坐吧。”\n“不必。”";
        let seg = segment(text, &["沈青崖", "陆明霞"]);
        assert_eq!(seg.units.len(), 1);
        let speakers: Vec<&str> =
            seg.units[0].quotes.iter().map(|q| q.speaker.as_str()).collect();
        assert_eq!(speakers, ["沈青崖", "陆明霞", "沈青崖", "陆明霞"]);
    }

    #[test]
    fn continuation_quote_keeps_speaker() {
        let text = "沈青崖道：“第一件事。”“第二件事。”";
        let seg = segment(text, &["沈青崖", "陆明霞", "韩铁心"]);
        assert_eq!(seg.units.len(), 1);
        let unit = &seg.units[0];
        assert_eq!(unit.quotes.len(), 2);
        assert_eq!(unit.quotes[1].speaker, "沈青崖");
        // One known speaker only: no addressee can be inferred.
        assert_eq!(unit.quotes[1].addressee, None);
    }

    #[test]
    fn unattributable_quote_is_dropped_with_warning() {
        let text = "有人道：“是谁？”";
        let seg = segment(text, &["沈青崖"]);
        assert!(seg.units.is_empty());
        assert!(matches!(seg.warnings[..], [SegmentWarning::UnattributedQuote { .. }]));
    }

    #[test]
    fn unbalanced_quote_warns_and_continues() {
        let text = "沈青崖道：“没说完\n陆明霞道：“好。”";
        let seg = segment(text, &["沈青崖", "陆明霞"]);
        assert!(seg
            .warnings
            .iter()
            .any(|w| matches!(w, SegmentWarning::UnbalancedQuotes { .. })));
        assert_eq!(seg.units.len(), 1);
        assert_eq!(seg.units[0].quotes[0].speaker, "陆明霞");
    }

    #[test]
    fn spans_slice_to_utterances() {
        let text = "沈青崖道：“你来了。”\n夜色沉沉。\n陆明霞道：“我来了。”「请坐」";
        let seg = segment(text, &["沈青崖", "陆明霞"]);
        for unit in &seg.units {
            for q in &unit.quotes {
                assert_eq!(&unit.context[q.span.0..q.span.1], q.utterance);
            }
        }
    }

    #[test]
    fn chapter_marker_breaks_chains() {
        let cfg = SegmenterConfig {
            chapter_marker: Some("^第.章".into()),
            ..SegmenterConfig::default()
        };
        let text = "沈青崖道：“上回说到。”\n第二章\n陆明霞道：“却说此时。”";
        let seg = segment_dialogue_chains(text, &roster(&["沈青崖", "陆明霞"]), &cfg, "t");
        assert_eq!(seg.units.len(), 2);
    }

    #[test]
    fn unit_ids_are_sequential_per_novel() {
        let text = "沈青崖道：“一。”\n\n\n\n大漠孤烟。戈壁千里。\n\n\n取道北上，又行了数月。\n再无人烟。\n陆明霞道：“二。”";
        let seg = segment(text, &["沈青崖", "陆明霞"]);
        let ids: Vec<&str> = seg.units.iter().map(|u| u.id.as_str()).collect();
        assert_eq!(ids, ["t-u0001", "t-u0002"]);
    }

    #[test]
    fn segmentation_is_deterministic() {
        let text = "沈青崖道：“你来了。”\n“我来了。”陆明霞道。";
        let a = segment(text, &["沈青崖", "陆明霞"]);
        let b = segment(text, &["沈青崖", "陆明霞"]);
        assert_eq!(a, b);
    }

    #[test]
    fn longest_name_wins_attribution() {
        let text = "陆明霞道：“是我。”";
        let seg = segment(text, &["陆明", "陆明霞"]);
        assert_eq!(seg.units[0].quotes[0].speaker, "陆明霞");
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut cfg = SegmenterConfig { max_gap_paragraphs: 0, ..SegmenterConfig::default() };
        assert!(cfg.validate().is_err());
        cfg.max_gap_paragraphs = 2;
        cfg.chapter_marker = Some("([".into());
        assert!(cfg.validate().is_err());
        assert!(SegmenterConfig::default().validate().is_ok());
    }
}
