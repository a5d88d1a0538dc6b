//! Undirected character networks from labeled relation instances.
//!
//! Edges carry interaction weight and a signed polarity score rendered as
//! a red-to-green color; node sizes damp quote frequency logarithmically
//! so protagonists do not dwarf the graph.

mod export;

pub use export::{export_network, load_network_json, to_dot, to_graphml, ExportFormat};

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DialogueUnit, Polarity, RelationInstance};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("instance {0} has no polarity label from the selected source")]
    MissingPolarity(String),
    #[error("pair has zero interactions")]
    ZeroInteractions,
    #[error("roles file: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which label set feeds the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Gold,
    Predicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PolarityCounts {
    pub positive: usize,
    pub neutral: usize,
    pub negative: usize,
}

impl PolarityCounts {
    pub fn total(&self) -> usize {
        self.positive + self.neutral + self.negative
    }

    fn add(&mut self, polarity: Polarity) {
        match polarity {
            Polarity::Positive => self.positive += 1,
            Polarity::Neutral => self.neutral += 1,
            Polarity::Negative => self.negative += 1,
        }
    }
}

/// Per-direction polarity counts surviving inside the undirected fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedCounts {
    pub from: String,
    pub to: String,
    pub counts: PolarityCounts,
}

/// Aggregated statistics for one unordered character pair (`a < b`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairStats {
    pub a: String,
    pub b: String,
    pub counts: PolarityCounts,
    pub directed: Vec<DirectedCounts>,
}

impl PairStats {
    pub fn interactions(&self) -> usize {
        self.counts.total()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Protagonist,
    Antagonist,
    #[default]
    Unassigned,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Protagonist => "protagonist",
            Role::Antagonist => "antagonist",
            Role::Unassigned => "unassigned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub name: String,
    pub quote_count: usize,
    pub size: f64,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEdge {
    pub a: String,
    pub b: String,
    /// Interaction count of the pair.
    pub weight: usize,
    pub polarity_score: f64,
    /// RGB hex, red (hostile) to green (friendly).
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterNetwork {
    pub nodes: Vec<NetworkNode>,
    pub edges: Vec<NetworkEdge>,
}

/// Folds directed labeled instances into unordered pair statistics,
/// sorted lexicographically by pair names.
pub fn aggregate_pairs(
    instances: &[RelationInstance],
    source: LabelSource,
) -> Result<Vec<PairStats>, NetworkError> {
    let mut pairs: BTreeMap<(String, String), PairStats> = BTreeMap::new();
    for inst in instances {
        let polarity = match source {
            LabelSource::Gold => inst.gold.map(|g| g.polarity),
            LabelSource::Predicted => inst.predicted.map(|p| p.polarity),
        }
        .ok_or_else(|| NetworkError::MissingPolarity(inst.id.clone()))?;

        let (a, b) = if inst.subject <= inst.object {
            (inst.subject.clone(), inst.object.clone())
        } else {
            (inst.object.clone(), inst.subject.clone())
        };
        let stats = pairs.entry((a.clone(), b.clone())).or_insert_with(|| PairStats {
            a,
            b,
            counts: PolarityCounts::default(),
            directed: Vec::new(),
        });
        stats.counts.add(polarity);
        match stats
            .directed
            .iter_mut()
            .find(|d| d.from == inst.subject && d.to == inst.object)
        {
            Some(direction) => direction.counts.add(polarity),
            None => {
                let mut counts = PolarityCounts::default();
                counts.add(polarity);
                stats.directed.push(DirectedCounts {
                    from: inst.subject.clone(),
                    to: inst.object.clone(),
                    counts,
                });
            }
        }
    }
    let mut out: Vec<PairStats> = pairs.into_values().collect();
    for stats in &mut out {
        stats.directed.sort_by(|x, y| x.from.cmp(&y.from).then_with(|| x.to.cmp(&y.to)));
        debug_assert_eq!(
            stats.directed.iter().map(|d| d.counts.total()).sum::<usize>(),
            stats.counts.total()
        );
    }
    Ok(out)
}

/// Signed polarity fraction: (positive − negative) / interactions.
pub fn polarity_score(stats: &PairStats) -> Result<f64, NetworkError> {
    let total = stats.interactions();
    if total == 0 {
        return Err(NetworkError::ZeroInteractions);
    }
    Ok((stats.counts.positive as f64 - stats.counts.negative as f64) / total as f64)
}

/// Smoothed node size: 1 + ln(1 + quote_count).
pub fn node_size(quote_count: usize) -> f64 {
    1.0 + (1.0 + quote_count as f64).ln()
}

/// Maps a polarity score to an RGB hex color by HSV hue interpolation:
/// −1 is red (0°), 0 yellow (60°), +1 green (120°), with S = V = 1.
/// Out-of-range scores are clamped with a warning.
pub fn edge_color(score: f64) -> String {
    let clamped = score.clamp(-1.0, 1.0);
    if clamped != score {
        log::warn!("polarity score {score} outside [-1, 1]; clamped");
    }
    let hue = (clamped + 1.0) * 60.0;
    let x = 1.0 - ((hue / 60.0) % 2.0 - 1.0).abs();
    let (r, g, b) = if hue < 60.0 { (1.0, x, 0.0) } else { (x, 1.0, 0.0) };
    let channel = |v: f64| (v * 255.0).round() as u8;
    format!("#{:02X}{:02X}{:02X}", channel(r), channel(g), channel(b))
}

/// Speaker quote frequencies over dialogue units; the default node-size
/// input.
pub fn quote_counts_from_units<'a>(
    units: impl IntoIterator<Item = &'a DialogueUnit>,
) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for unit in units {
        for quote in &unit.quotes {
            *counts.entry(quote.speaker.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Builds the full network from labeled instances.
///
/// Nodes cover every pair endpoint plus `extra_nodes` (isolated characters
/// a caller wants drawn anyway); `quote_counts` defaults any missing name
/// to zero.
pub fn build_network(
    instances: &[RelationInstance],
    source: LabelSource,
    quote_counts: &BTreeMap<String, usize>,
    roles: &BTreeMap<String, Role>,
    extra_nodes: impl IntoIterator<Item = String>,
) -> Result<CharacterNetwork, NetworkError> {
    let pairs = aggregate_pairs(instances, source)?;
    let mut names: BTreeSet<String> = extra_nodes.into_iter().collect();
    for pair in &pairs {
        names.insert(pair.a.clone());
        names.insert(pair.b.clone());
    }
    let nodes = names
        .into_iter()
        .map(|name| {
            let quote_count = quote_counts.get(&name).copied().unwrap_or(0);
            NetworkNode {
                quote_count,
                size: node_size(quote_count),
                role: roles.get(&name).copied().unwrap_or_default(),
                name,
            }
        })
        .collect();
    let edges = pairs
        .iter()
        .map(|stats| {
            let score = polarity_score(stats)?;
            Ok(NetworkEdge {
                a: stats.a.clone(),
                b: stats.b.clone(),
                weight: stats.interactions(),
                polarity_score: score,
                color: edge_color(score),
            })
        })
        .collect::<Result<Vec<_>, NetworkError>>()?;
    Ok(CharacterNetwork { nodes, edges })
}

/// Reads a role annotation file: JSON object {name: "protagonist" |
/// "antagonist"}.
pub fn load_roles(path: impl AsRef<Path>) -> Result<BTreeMap<String, Role>, NetworkError> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let raw: BTreeMap<String, String> =
        serde_json::from_str(&text).map_err(|e| NetworkError::Schema(e.to_string()))?;
    raw.into_iter()
        .map(|(name, role)| match role.as_str() {
            "protagonist" => Ok((name, Role::Protagonist)),
            "antagonist" => Ok((name, Role::Antagonist)),
            other => Err(NetworkError::Schema(format!(
                "unknown role `{other}` for {name} (expected protagonist or antagonist)"
            ))),
        })
        .collect()
}
