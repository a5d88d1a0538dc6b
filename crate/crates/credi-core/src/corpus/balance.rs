//! Class-balance filtering along one dimension.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, Dataset, Dimension};

/// Filters and down-samples gold instances so every surviving class of
/// `dimension` has a count in `[min_count, max_count]`.
///
/// Classes below `min_count` are removed entirely; classes above
/// `max_count` are down-sampled to exactly `max_count` with seeded uniform
/// sampling. `max_count = None` means unlimited. Instances without gold
/// labels have no class and are dropped. Surviving instances keep their
/// relative order.
pub fn balance_labels(
    ds: &Dataset,
    dimension: Dimension,
    min_count: usize,
    max_count: Option<usize>,
    seed: u64,
) -> Result<Dataset, CorpusError> {
    if let Some(max) = max_count {
        assert!(max >= min_count, "max_count {max} < min_count {min_count}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    // Fixed label order keeps the sampling sequence (and thus the result)
    // independent of instance content.
    for label in dimension.labels() {
        let members: Vec<usize> = ds
            .instances
            .iter()
            .enumerate()
            .filter(|(_, inst)| inst.gold.map(|g| g.get(dimension)) == Some(label))
            .map(|(idx, _)| idx)
            .collect();
        if members.len() < min_count {
            continue;
        }
        match max_count {
            Some(max) if members.len() > max => {
                let picked = rand::seq::index::sample(&mut rng, members.len(), max);
                keep.extend(picked.iter().map(|i| members[i]));
            }
            _ => keep.extend(members),
        }
    }
    if keep.is_empty() {
        return Err(CorpusError::AllClassesFiltered);
    }
    keep.sort_unstable();
    Ok(ds.restrict_to(keep.into_iter().map(|i| ds.instances[i].clone()).collect()))
}

/// Count of gold instances carrying `label` on `dimension`.
#[cfg(test)]
pub(crate) fn class_count(ds: &Dataset, dimension: Dimension, label: super::RelationLabel) -> usize {
    ds.instances
        .iter()
        .filter(|i| i.gold.map(|g| g.get(dimension)) == Some(label))
        .count()
}

#[cfg(test)]
mod tests {
    use super::super::tests::{gold, instance, unit};
    use super::super::{Dataset, Hierarchy, Polarity, RelType, RelationLabel};
    use super::*;

    /// Polarity class counts {positive: a, neutral: b, negative: c}.
    fn dataset(a: usize, b: usize, c: usize) -> Dataset {
        let units = vec![unit("u1", &[("甲", Some("乙"))])];
        let mut instances = Vec::new();
        for (p, n) in [(Polarity::Positive, a), (Polarity::Neutral, b), (Polarity::Negative, c)] {
            for _ in 0..n {
                let id = format!("r{:04}", instances.len());
                instances.push(instance(&id, "u1", "甲", "乙", gold(p, RelType::Other, Hierarchy::Peer)));
            }
        }
        Dataset::from_parts(units, instances).unwrap()
    }

    fn counts(ds: &Dataset) -> (usize, usize, usize) {
        let c = |p| class_count(ds, Dimension::Polarity, RelationLabel::Polarity(p));
        (c(Polarity::Positive), c(Polarity::Neutral), c(Polarity::Negative))
    }

    #[test]
    fn removes_small_and_caps_large_classes() {
        let ds = dataset(100, 5, 40);
        let out = balance_labels(&ds, Dimension::Polarity, 10, Some(50), 1).unwrap();
        assert_eq!(counts(&out), (50, 0, 40));
    }

    #[test]
    fn identity_when_unbounded() {
        let ds = dataset(3, 2, 1);
        let out = balance_labels(&ds, Dimension::Polarity, 0, None, 1).unwrap();
        assert_eq!(out.instances, ds.instances);
    }

    #[test]
    fn deterministic_per_seed() {
        let ds = dataset(60, 0, 30);
        let a = balance_labels(&ds, Dimension::Polarity, 1, Some(20), 7).unwrap();
        let b = balance_labels(&ds, Dimension::Polarity, 1, Some(20), 7).unwrap();
        assert_eq!(a.instances, b.instances);
    }

    #[test]
    fn order_is_preserved() {
        let ds = dataset(50, 10, 50);
        let out = balance_labels(&ds, Dimension::Polarity, 1, Some(15), 3).unwrap();
        let ids: Vec<_> = out.instances.iter().map(|i| i.id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn surviving_counts_respect_bounds() {
        let ds = dataset(31, 9, 17);
        let out = balance_labels(&ds, Dimension::Polarity, 10, Some(20), 5).unwrap();
        let (pos, neu, neg) = counts(&out);
        for n in [pos, neu, neg] {
            assert!(n == 0 || (10..=20).contains(&n), "count {n} out of bounds");
        }
        assert_eq!(neu, 0);
    }

    #[test]
    fn all_filtered_is_an_error() {
        let ds = dataset(2, 2, 2);
        assert!(matches!(
            balance_labels(&ds, Dimension::Polarity, 10, None, 0),
            Err(CorpusError::AllClassesFiltered)
        ));
    }

    #[test]
    fn instances_without_gold_are_dropped() {
        let units = vec![unit("u1", &[("甲", Some("乙"))])];
        let instances = vec![
            instance("r1", "u1", "甲", "乙", gold(Polarity::Positive, RelType::Other, Hierarchy::Peer)),
            instance("r2", "u1", "乙", "甲", None),
        ];
        let ds = Dataset::from_parts(units, instances).unwrap();
        let out = balance_labels(&ds, Dimension::Polarity, 0, None, 0).unwrap();
        assert_eq!(out.instances.len(), 1);
        assert_eq!(out.instances[0].id, "r1");
    }
}
