//! Character-name anonymization.
//!
//! Replaces every roster name with an opaque code (`C001`, `C002`, ...) so
//! that a model cannot rely on names it memorized during pretraining. Code
//! assignment is a seeded shuffle of the roster; the same seed always yields
//! the same mapping.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{derive_roster, Dataset, DialogueUnit, Quote};

/// Anonymizes all character names in the dataset.
///
/// Returns the rewritten dataset and the bijective name -> code map.
/// Occurrences inside `context` and utterances are found by longest-match
/// greedy scanning, so a name that contains another roster name as a prefix
/// is replaced as a whole. Quote spans are remapped to the rewritten text.
pub fn anonymize_names(ds: &Dataset, seed: u64) -> (Dataset, BTreeMap<String, String>) {
    let mut names: Vec<&String> = ds.character_roster.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    names.shuffle(&mut rng);

    let width = std::cmp::max(3, names.len().to_string().len());
    let name_map: BTreeMap<String, String> = names
        .iter()
        .enumerate()
        .map(|(i, name)| ((*name).clone(), format!("C{:0width$}", i + 1)))
        .collect();
    debug_assert_eq!(
        name_map.values().collect::<std::collections::BTreeSet<_>>().len(),
        name_map.len(),
        "codes must be unique"
    );

    // Longest name first so overlapping names resolve to the longest match.
    let mut patterns: Vec<(&str, &str)> =
        name_map.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    patterns.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(b.0)));

    let rename = |name: &str| name_map.get(name).cloned().unwrap_or_else(|| name.to_string());

    let units: BTreeMap<String, DialogueUnit> = ds
        .units
        .values()
        .map(|u| {
            let (context, edits) = replace_tracking(&u.context, &patterns);
            let quotes = u
                .quotes
                .iter()
                .map(|q| Quote {
                    speaker: rename(&q.speaker),
                    addressee: q.addressee.as_deref().map(rename),
                    utterance: replace_tracking(&q.utterance, &patterns).0,
                    span: (remap(q.span.0, &edits), remap(q.span.1, &edits)),
                })
                .collect();
            let unit = DialogueUnit {
                id: u.id.clone(),
                novel_id: u.novel_id.clone(),
                context,
                quotes,
            };
            (unit.id.clone(), unit)
        })
        .collect();

    let instances = ds
        .instances
        .iter()
        .map(|i| {
            let mut i = i.clone();
            i.subject = rename(&i.subject);
            i.object = rename(&i.object);
            i
        })
        .collect::<Vec<_>>();

    let out = Dataset {
        character_roster: derive_roster(units.values(), &instances),
        units,
        instances,
    };
    (out, name_map)
}

/// One replacement performed on the text, in byte offsets.
struct Edit {
    old_start: usize,
    old_end: usize,
    new_start: usize,
    new_end: usize,
}

/// Replaces all pattern occurrences, longest pattern first at each position,
/// and records the edits for span remapping.
fn replace_tracking(text: &str, patterns: &[(&str, &str)]) -> (String, Vec<Edit>) {
    let mut out = String::with_capacity(text.len());
    let mut edits = Vec::new();
    let mut pos = 0;
    'outer: while pos < text.len() {
        let rest = &text[pos..];
        for (name, code) in patterns {
            if rest.starts_with(name) {
                edits.push(Edit {
                    old_start: pos,
                    old_end: pos + name.len(),
                    new_start: out.len(),
                    new_end: out.len() + code.len(),
                });
                out.push_str(code);
                pos += name.len();
                continue 'outer;
            }
        }
        let ch = rest.chars().next().expect("pos is a char boundary");
        out.push(ch);
        pos += ch.len_utf8();
    }
    (out, edits)
}

/// Maps a byte offset in the original text to the rewritten text.
/// Offsets strictly inside a replaced name clamp to the code start; quote
/// spans never cut a name in half because delimiters are not name characters.
fn remap(offset: usize, edits: &[Edit]) -> usize {
    let mut delta = 0isize;
    for e in edits {
        if e.old_end <= offset {
            delta += e.new_end as isize - e.new_start as isize;
            delta -= e.old_end as isize - e.old_start as isize;
        } else if e.old_start < offset {
            debug_assert!(false, "span endpoint {offset} splits a replaced name");
            return e.new_start;
        } else {
            break;
        }
    }
    (offset as isize + delta) as usize
}
