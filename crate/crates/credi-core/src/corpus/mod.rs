//! Corpus data model: dialogue units, relation instances, and datasets.
//!
//! A corpus is stored as JSON Lines, one [`DialogueUnit`] record per line
//! with its relation instances embedded:
//!
//! ```json
//! {"id":"u0001","novel_id":"sample","context":"...","quotes":[{"speaker":"甲",
//!  "addressee":"乙","utterance":"...","span":[12,30]}],"instances":[{"id":"r0001",
//!  "subject":"甲","object":"乙","gold":{"polarity":"positive","rel_type":"kinship",
//!  "hierarchy":"peer"}}]}
//! ```
//!
//! Relationships are labeled along three parallel dimensions (polarity,
//! relationship type, generational hierarchy), nine label values in total.

mod anonymize;
mod balance;
mod finetune;
mod split;
mod stats;

pub use anonymize::anonymize_names;
pub use balance::balance_labels;
pub use finetune::export_finetune_file;
pub use split::{split_dataset, split_sizes, SplitSpec};
pub use stats::{dataset_stats, DimensionStats, LabelStat, StatsReport};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The three parallel relationship dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    /// Emotional stance: positive / neutral / negative.
    Polarity,
    /// Social nature: kinship / affiliative / other.
    RelType,
    /// Relative seniority: senior / peer / junior.
    Hierarchy,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Polarity, Dimension::RelType, Dimension::Hierarchy];

    /// Canonical ASCII key used in answer lines and JSON.
    pub fn key(&self) -> &'static str {
        match self {
            Dimension::Polarity => "polarity",
            Dimension::RelType => "rel_type",
            Dimension::Hierarchy => "hierarchy",
        }
    }

    pub fn from_key(s: &str) -> Option<Dimension> {
        match s {
            "polarity" => Some(Dimension::Polarity),
            "rel_type" => Some(Dimension::RelType),
            "hierarchy" => Some(Dimension::Hierarchy),
            _ => None,
        }
    }

    /// Canonical label tokens for this dimension, in fixed order.
    pub fn label_tokens(&self) -> &'static [&'static str] {
        match self {
            Dimension::Polarity => &["positive", "neutral", "negative"],
            Dimension::RelType => &["kinship", "affiliative", "other"],
            Dimension::Hierarchy => &["senior", "peer", "junior"],
        }
    }

    pub fn labels(&self) -> Vec<RelationLabel> {
        self.label_tokens()
            .iter()
            .map(|t| RelationLabel::parse_token(*self, t).expect("canonical token"))
            .collect()
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Neutral,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelType {
    Kinship,
    Affiliative,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hierarchy {
    Senior,
    Peer,
    Junior,
}

/// One label value, tagged with the dimension it belongs to.
///
/// The nine canonical tokens are globally distinct, so a bare token is
/// enough to recover the full label (see [`RelationLabel::from_token_any`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationLabel {
    Polarity(Polarity),
    RelType(RelType),
    Hierarchy(Hierarchy),
}

impl RelationLabel {
    pub fn dimension(&self) -> Dimension {
        match self {
            RelationLabel::Polarity(_) => Dimension::Polarity,
            RelationLabel::RelType(_) => Dimension::RelType,
            RelationLabel::Hierarchy(_) => Dimension::Hierarchy,
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            RelationLabel::Polarity(Polarity::Positive) => "positive",
            RelationLabel::Polarity(Polarity::Neutral) => "neutral",
            RelationLabel::Polarity(Polarity::Negative) => "negative",
            RelationLabel::RelType(RelType::Kinship) => "kinship",
            RelationLabel::RelType(RelType::Affiliative) => "affiliative",
            RelationLabel::RelType(RelType::Other) => "other",
            RelationLabel::Hierarchy(Hierarchy::Senior) => "senior",
            RelationLabel::Hierarchy(Hierarchy::Peer) => "peer",
            RelationLabel::Hierarchy(Hierarchy::Junior) => "junior",
        }
    }

    /// Parses a token that must belong to `dim`.
    pub fn parse_token(dim: Dimension, token: &str) -> Option<RelationLabel> {
        let label = Self::from_token_any(token)?;
        (label.dimension() == dim).then_some(label)
    }

    /// Parses any of the nine canonical tokens.
    pub fn from_token_any(token: &str) -> Option<RelationLabel> {
        Some(match token {
            "positive" => RelationLabel::Polarity(Polarity::Positive),
            "neutral" => RelationLabel::Polarity(Polarity::Neutral),
            "negative" => RelationLabel::Polarity(Polarity::Negative),
            "kinship" => RelationLabel::RelType(RelType::Kinship),
            "affiliative" => RelationLabel::RelType(RelType::Affiliative),
            "other" => RelationLabel::RelType(RelType::Other),
            "senior" => RelationLabel::Hierarchy(Hierarchy::Senior),
            "peer" => RelationLabel::Hierarchy(Hierarchy::Peer),
            "junior" => RelationLabel::Hierarchy(Hierarchy::Junior),
            _ => return None,
        })
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl Serialize for RelationLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for RelationLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        RelationLabel::from_token_any(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown label token `{s}`")))
    }
}

/// Partial assignment of labels, at most one per dimension.
pub type LabelMap = BTreeMap<Dimension, RelationLabel>;

/// A complete annotation: exactly one label per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSet {
    pub polarity: Polarity,
    pub rel_type: RelType,
    pub hierarchy: Hierarchy,
}

impl LabelSet {
    pub fn new(polarity: Polarity, rel_type: RelType, hierarchy: Hierarchy) -> Self {
        Self { polarity, rel_type, hierarchy }
    }

    pub fn get(&self, dim: Dimension) -> RelationLabel {
        match dim {
            Dimension::Polarity => RelationLabel::Polarity(self.polarity),
            Dimension::RelType => RelationLabel::RelType(self.rel_type),
            Dimension::Hierarchy => RelationLabel::Hierarchy(self.hierarchy),
        }
    }

    pub fn to_map(&self) -> LabelMap {
        Dimension::ALL.iter().map(|d| (*d, self.get(*d))).collect()
    }

    /// Rebuilds a complete set from a map; `None` unless all three
    /// dimensions are present and consistent.
    pub fn from_map(map: &LabelMap) -> Option<LabelSet> {
        let p = match map.get(&Dimension::Polarity)? {
            RelationLabel::Polarity(p) => *p,
            _ => return None,
        };
        let r = match map.get(&Dimension::RelType)? {
            RelationLabel::RelType(r) => *r,
            _ => return None,
        };
        let h = match map.get(&Dimension::Hierarchy)? {
            RelationLabel::Hierarchy(h) => *h,
            _ => return None,
        };
        Some(LabelSet::new(p, r, h))
    }
}

/// One attributed quotation inside a dialogue unit.
///
/// `span` is the byte range of the utterance inside the owning unit's
/// `context` (quote delimiters excluded).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quote {
    pub speaker: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub addressee: Option<String>,
    pub utterance: String,
    pub span: (usize, usize),
}

/// A contiguous dialogue chain: surrounding narration plus attributed quotes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueUnit {
    pub id: String,
    pub novel_id: String,
    pub context: String,
    pub quotes: Vec<Quote>,
}

/// A directed (subject -> object) character pair within one dialogue unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInstance {
    pub id: String,
    pub unit_id: String,
    pub subject: String,
    pub object: String,
    pub gold: Option<LabelSet>,
    pub predicted: Option<LabelSet>,
}

/// In-memory dataset: units, instances, and the character roster.
///
/// The roster is derived from instance subjects/objects and quote
/// speakers/addressees. Values are immutable after load; operations
/// return new datasets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub units: BTreeMap<String, DialogueUnit>,
    pub instances: Vec<RelationInstance>,
    pub character_roster: BTreeSet<String>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("line {line}: {detail}")]
    Schema { line: usize, detail: String },
    #[error("instance {instance_id} references unknown unit {unit_id}")]
    DanglingReference { instance_id: String, unit_id: String },
    #[error("dataset has no instances")]
    EmptyDataset,
    #[error("instance {0} has no gold labels")]
    MissingGold(String),
    #[error("all label classes removed by balancing thresholds")]
    AllClassesFiltered,
    #[error("prompt config: {0}")]
    Prompt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Wire shape of one corpus record (instances embedded in their unit).
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitRecord {
    id: String,
    novel_id: String,
    context: String,
    quotes: Vec<Quote>,
    #[serde(default)]
    instances: Vec<InstanceRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    id: String,
    subject: String,
    object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold: Option<LabelSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    predicted: Option<LabelSet>,
}

impl Dataset {
    /// Assembles a dataset from parts, deriving the roster, and validates it.
    pub fn from_parts(
        units: Vec<DialogueUnit>,
        instances: Vec<RelationInstance>,
    ) -> Result<Dataset, CorpusError> {
        let mut unit_map = BTreeMap::new();
        for u in units {
            if unit_map.insert(u.id.clone(), u).is_some() {
                return Err(CorpusError::Schema {
                    line: 0,
                    detail: "duplicate unit id".into(),
                });
            }
        }
        let ds = Dataset {
            character_roster: derive_roster(unit_map.values(), &instances),
            units: unit_map,
            instances,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Checks every structural invariant; line numbers are 0 (not file-backed).
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen_instance_ids = BTreeSet::new();
        for (id, unit) in &self.units {
            if *id != unit.id {
                return Err(schema(0, format!("unit map key {id} != unit id {}", unit.id)));
            }
            validate_unit(0, unit)?;
        }
        for inst in &self.instances {
            if !seen_instance_ids.insert(&inst.id) {
                return Err(schema(0, format!("duplicate instance id {}", inst.id)));
            }
            if !self.units.contains_key(&inst.unit_id) {
                return Err(CorpusError::DanglingReference {
                    instance_id: inst.id.clone(),
                    unit_id: inst.unit_id.clone(),
                });
            }
            validate_instance(0, inst)?;
            if !self.character_roster.contains(&inst.subject)
                || !self.character_roster.contains(&inst.object)
            {
                return Err(schema(
                    0,
                    format!("instance {} names a character missing from the roster", inst.id),
                ));
            }
        }
        Ok(())
    }

    pub fn unit(&self, id: &str) -> Option<&DialogueUnit> {
        self.units.get(id)
    }

    /// Count of gold label values; always three per gold-annotated instance.
    pub fn gold_label_count(&self) -> usize {
        3 * self.instances.iter().filter(|i| i.gold.is_some()).count()
    }

    pub fn gold_instance_count(&self) -> usize {
        self.instances.iter().filter(|i| i.gold.is_some()).count()
    }

    /// New dataset keeping only the given instances and the units they
    /// reference; roster is re-derived.
    pub fn restrict_to(&self, instances: Vec<RelationInstance>) -> Dataset {
        let referenced: BTreeSet<&str> = instances.iter().map(|i| i.unit_id.as_str()).collect();
        let units: BTreeMap<String, DialogueUnit> = self
            .units
            .iter()
            .filter(|(id, _)| referenced.contains(id.as_str()))
            .map(|(id, u)| (id.clone(), u.clone()))
            .collect();
        Dataset {
            character_roster: derive_roster(units.values(), &instances),
            units,
            instances,
        }
    }

    /// Instances that carry gold labels, as a restricted dataset.
    pub fn gold_only(&self) -> Dataset {
        self.restrict_to(self.instances.iter().filter(|i| i.gold.is_some()).cloned().collect())
    }
}

fn schema(line: usize, detail: impl Into<String>) -> CorpusError {
    CorpusError::Schema { line, detail: detail.into() }
}

pub(crate) fn derive_roster<'a>(
    units: impl Iterator<Item = &'a DialogueUnit>,
    instances: &[RelationInstance],
) -> BTreeSet<String> {
    let mut roster = BTreeSet::new();
    for u in units {
        for q in &u.quotes {
            roster.insert(q.speaker.clone());
            if let Some(a) = &q.addressee {
                roster.insert(a.clone());
            }
        }
    }
    for i in instances {
        roster.insert(i.subject.clone());
        roster.insert(i.object.clone());
    }
    roster
}

fn validate_unit(line: usize, unit: &DialogueUnit) -> Result<(), CorpusError> {
    if unit.id.is_empty() {
        return Err(schema(line, "unit id is empty"));
    }
    if unit.quotes.is_empty() {
        return Err(schema(line, format!("unit {} has no quotes", unit.id)));
    }
    let mut prev_start = 0usize;
    for (qi, q) in unit.quotes.iter().enumerate() {
        if q.speaker.is_empty() {
            return Err(schema(line, format!("unit {} quote {qi}: empty speaker", unit.id)));
        }
        if q.utterance.is_empty() {
            return Err(schema(line, format!("unit {} quote {qi}: empty utterance", unit.id)));
        }
        let (s, e) = q.span;
        if s > e || e > unit.context.len() {
            return Err(schema(
                line,
                format!("unit {} quote {qi}: span [{s},{e}) out of bounds", unit.id),
            ));
        }
        if !unit.context.is_char_boundary(s) || !unit.context.is_char_boundary(e) {
            return Err(schema(
                line,
                format!("unit {} quote {qi}: span [{s},{e}) splits a character", unit.id),
            ));
        }
        if qi > 0 && s < prev_start {
            return Err(schema(line, format!("unit {}: quotes not ordered by span", unit.id)));
        }
        prev_start = s;
    }
    Ok(())
}

fn validate_instance(line: usize, inst: &RelationInstance) -> Result<(), CorpusError> {
    if inst.id.is_empty() {
        return Err(schema(line, "instance id is empty"));
    }
    if inst.subject.is_empty() || inst.object.is_empty() {
        return Err(schema(line, format!("instance {}: empty character name", inst.id)));
    }
    if inst.subject == inst.object {
        return Err(schema(line, format!("instance {}: subject equals object", inst.id)));
    }
    Ok(())
}

/// Loads a JSON Lines corpus file. Malformed records are rejected with the
/// offending line number, never silently dropped.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CorpusError::FileNotFound(path.to_path_buf()),
        _ => CorpusError::Io(e),
    })?;
    let reader = BufReader::new(file);

    let mut units = Vec::new();
    let mut instances = Vec::new();
    let mut unit_ids = BTreeSet::new();
    let mut instance_ids = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: UnitRecord = serde_json::from_str(&line)
            .map_err(|e| schema(line_no, e.to_string()))?;
        if !unit_ids.insert(record.id.clone()) {
            return Err(schema(line_no, format!("duplicate unit id {}", record.id)));
        }
        let unit = DialogueUnit {
            id: record.id,
            novel_id: record.novel_id,
            context: record.context,
            quotes: record.quotes,
        };
        validate_unit(line_no, &unit)?;
        for rec in record.instances {
            if !instance_ids.insert(rec.id.clone()) {
                return Err(schema(line_no, format!("duplicate instance id {}", rec.id)));
            }
            let inst = RelationInstance {
                id: rec.id,
                unit_id: unit.id.clone(),
                subject: rec.subject,
                object: rec.object,
                gold: rec.gold,
                predicted: rec.predicted,
            };
            validate_instance(line_no, &inst)?;
            instances.push(inst);
        }
        units.push(unit);
    }

    let mut unit_map = BTreeMap::new();
    for u in units {
        unit_map.insert(u.id.clone(), u);
    }
    Ok(Dataset {
        character_roster: derive_roster(unit_map.values(), &instances),
        units: unit_map,
        instances,
    })
}

/// Writes a dataset back to the JSONL corpus format, one unit per line in
/// unit-id order; instances are embedded in dataset order.
pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let mut by_unit: BTreeMap<&str, Vec<&RelationInstance>> = BTreeMap::new();
    for inst in &ds.instances {
        by_unit.entry(inst.unit_id.as_str()).or_default().push(inst);
    }
    let mut out = File::create(path.as_ref())?;
    for (id, unit) in &ds.units {
        let record = UnitRecord {
            id: unit.id.clone(),
            novel_id: unit.novel_id.clone(),
            context: unit.context.clone(),
            quotes: unit.quotes.clone(),
            instances: by_unit
                .get(id.as_str())
                .into_iter()
                .flatten()
                .map(|i| InstanceRecord {
                    id: i.id.clone(),
                    subject: i.subject.clone(),
                    object: i.object.clone(),
                    gold: i.gold,
                    predicted: i.predicted,
                })
                .collect(),
        };
        let json = serde_json::to_string(&record).expect("corpus record serializes");
        writeln!(out, "{json}")?;
    }
    Ok(())
}
