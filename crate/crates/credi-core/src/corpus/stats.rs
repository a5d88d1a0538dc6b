//! Descriptive statistics over a dataset's gold annotations.

use serde::{Deserialize, Serialize};

use super::{Dataset, Dimension, RelationLabel};

/// Count and share of one label class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStat {
    pub label: String,
    pub count: usize,
    /// Percentage of the dimension's gold total; `None` when there are no
    /// gold instances.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionStats {
    pub dimension: Dimension,
    /// One entry per canonical label, in fixed label order.
    pub labels: Vec<LabelStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub unit_count: usize,
    pub instance_count: usize,
    pub gold_instance_count: usize,
    /// Always `3 * gold_instance_count`.
    pub gold_label_count: usize,
    pub character_count: usize,
    pub dimensions: Vec<DimensionStats>,
}

/// Computes label distributions per dimension.
///
/// Percentages are computed as `count * 100 / total` so that shares with an
/// exact decimal representation come out exact in `f64`.
pub fn dataset_stats(ds: &Dataset) -> StatsReport {
    let gold: Vec<_> = ds.instances.iter().filter_map(|i| i.gold.as_ref()).collect();
    let total = gold.len();

    let dimensions = Dimension::ALL
        .iter()
        .map(|dim| {
            let labels = dim
                .labels()
                .into_iter()
                .map(|label| {
                    let count = gold.iter().filter(|g| g.get(*dim) == label).count();
                    LabelStat {
                        label: label.token().to_string(),
                        count,
                        percent: (total > 0).then(|| (count as f64 * 100.0) / total as f64),
                    }
                })
                .collect();
            DimensionStats { dimension: *dim, labels }
        })
        .collect();

    StatsReport {
        unit_count: ds.units.len(),
        instance_count: ds.instances.len(),
        gold_instance_count: total,
        gold_label_count: 3 * total,
        character_count: ds.character_roster.len(),
        dimensions,
    }
}

impl StatsReport {
    pub fn percent(&self, dim: Dimension, label: RelationLabel) -> Option<f64> {
        self.dimensions
            .iter()
            .find(|d| d.dimension == dim)?
            .labels
            .iter()
            .find(|l| l.label == label.token())?
            .percent
    }

    pub fn count(&self, dim: Dimension, label: RelationLabel) -> usize {
        self.dimensions
            .iter()
            .find(|d| d.dimension == dim)
            .and_then(|d| d.labels.iter().find(|l| l.label == label.token()))
            .map_or(0, |l| l.count)
    }

    /// Plain-text rendering for the CLI.
    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "units:          {}", self.unit_count).unwrap();
        writeln!(out, "instances:      {}", self.instance_count).unwrap();
        writeln!(out, "gold instances: {}", self.gold_instance_count).unwrap();
        writeln!(out, "gold labels:    {}", self.gold_label_count).unwrap();
        writeln!(out, "characters:     {}", self.character_count).unwrap();
        for dim in &self.dimensions {
            writeln!(out, "{}:", dim.dimension).unwrap();
            for stat in &dim.labels {
                match stat.percent {
                    Some(p) => writeln!(out, "  {:<12} {:>6}  {:>6.2}%", stat.label, stat.count, p)
                        .unwrap(),
                    None => writeln!(out, "  {:<12} {:>6}       -", stat.label, stat.count).unwrap(),
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{gold, instance, unit};
    use super::super::{Dataset, Hierarchy, Polarity, RelType};
    use super::*;

    fn dataset_with_polarity(pos: usize, neu: usize, neg: usize) -> Dataset {
        let units = vec![unit("u1", &[("甲", Some("乙"))])];
        let mut instances = Vec::new();
        let mut push = |p: Polarity, n: usize| {
            for _ in 0..n {
                let id = format!("r{}", instances.len());
                instances.push(instance(
                    &id,
                    "u1",
                    "甲",
                    "乙",
                    gold(p, RelType::Other, Hierarchy::Peer),
                ));
            }
        };
        push(Polarity::Positive, pos);
        push(Polarity::Neutral, neu);
        push(Polarity::Negative, neg);
        Dataset::from_parts(units, instances).unwrap()
    }

    #[test]
    fn counts_and_percentages() {
        let ds = dataset_with_polarity(29, 5, 16);
        let report = dataset_stats(&ds);
        assert_eq!(report.gold_instance_count, 50);
        assert_eq!(report.gold_label_count, 150);
        let pol = RelationLabel::Polarity(Polarity::Positive);
        assert_eq!(report.count(Dimension::Polarity, pol), 29);
        assert_eq!(report.percent(Dimension::Polarity, pol), Some(58.0));
        assert_eq!(
            report.percent(Dimension::Polarity, RelationLabel::Polarity(Polarity::Neutral)),
            Some(10.0)
        );
    }

    #[test]
    fn percentages_sum_to_hundred() {
        let ds = dataset_with_polarity(7, 3, 11);
        let report = dataset_stats(&ds);
        for dim in &report.dimensions {
            let sum: f64 = dim.labels.iter().filter_map(|l| l.percent).sum();
            assert!((sum - 100.0).abs() < 1e-9, "{}: {sum}", dim.dimension);
        }
    }

    #[test]
    fn empty_dataset_has_no_percentages() {
        let report = dataset_stats(&Dataset::default());
        assert_eq!(report.gold_instance_count, 0);
        for dim in &report.dimensions {
            assert_eq!(dim.labels.len(), 3);
            assert!(dim.labels.iter().all(|l| l.percent.is_none() && l.count == 0));
        }
    }

    #[test]
    fn instances_without_gold_are_excluded() {
        let units = vec![unit("u1", &[("甲", Some("乙"))])];
        let instances = vec![
            instance("r1", "u1", "甲", "乙", gold(Polarity::Positive, RelType::Kinship, Hierarchy::Peer)),
            instance("r2", "u1", "乙", "甲", None),
        ];
        let ds = Dataset::from_parts(units, instances).unwrap();
        let report = dataset_stats(&ds);
        assert_eq!(report.instance_count, 2);
        assert_eq!(report.gold_instance_count, 1);
    }

    #[test]
    fn render_text_mentions_every_label() {
        let ds = dataset_with_polarity(1, 1, 1);
        let text = dataset_stats(&ds).render_text();
        for token in ["positive", "neutral", "negative", "kinship", "senior", "junior"] {
            assert!(text.contains(token), "missing {token} in:\n{text}");
        }
    }
}
