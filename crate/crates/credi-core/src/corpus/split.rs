//! Deterministic train/validation/test splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Dataset};

/// Split ratio expressed as integer parts, e.g. 8:1:1.
///
/// Integer parts keep the ratio exact; sizes are derived with integer
/// arithmetic and the remainder goes to the test split, so the three sizes
/// always sum to the instance count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: u32,
    pub val: u32,
    pub test: u32,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: u32, val: u32, test: u32, seed: u64) -> Self {
        Self { train, val, test, seed }
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::new(8, 1, 1, 0)
    }
}

/// Exact split sizes for `n` instances: floor for train and val, remainder
/// to test. Guarantees `train + val + test == n`.
pub fn split_sizes(n: usize, spec: &SplitSpec) -> (usize, usize, usize) {
    let total = (spec.train + spec.val + spec.test) as usize;
    assert!(total > 0, "split ratio must have a positive part");
    let train = n * spec.train as usize / total;
    let val = n * spec.val as usize / total;
    (train, val, n - train - val)
}

/// Splits instances into (train, val, test) datasets.
///
/// Instances are shuffled with a seeded generator, partitioned by
/// [`split_sizes`], then restored to corpus order within each split. Each
/// split keeps only the units its instances reference.
pub fn split_dataset(
    ds: &Dataset,
    spec: &SplitSpec,
) -> Result<(Dataset, Dataset, Dataset), CorpusError> {
    if ds.instances.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    let n = ds.instances.len();
    let (n_train, n_val, _) = split_sizes(n, spec);

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let take = |slice: &[usize]| {
        let mut idx = slice.to_vec();
        idx.sort_unstable();
        ds.restrict_to(idx.into_iter().map(|i| ds.instances[i].clone()).collect())
    };
    let train = take(&order[..n_train]);
    let val = take(&order[n_train..n_train + n_val]);
    let test = take(&order[n_train + n_val..]);
    Ok((train, val, test))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::super::tests::{instance, unit};
    use super::super::Dataset;
    use super::*;

    fn dataset(n: usize) -> Dataset {
        let units = vec![unit("u1", &[("甲", Some("乙"))]), unit("u2", &[("丙", Some("丁"))])];
        let instances = (0..n)
            .map(|i| {
                let (u, s, o) = if i % 2 == 0 { ("u1", "甲", "乙") } else { ("u2", "丙", "丁") };
                instance(&format!("r{i:04}"), u, s, o, None)
            })
            .collect();
        Dataset::from_parts(units, instances).unwrap()
    }

    #[test]
    fn sizes_are_exact_and_sum() {
        let spec = SplitSpec::default();
        assert_eq!(split_sizes(3591, &spec), (2872, 359, 360));
        assert_eq!(split_sizes(10, &spec), (8, 1, 1));
        assert_eq!(split_sizes(9, &spec), (7, 0, 2));
        assert_eq!(split_sizes(0, &spec), (0, 0, 0));
        for n in 0..500 {
            let (a, b, c) = split_sizes(n, &spec);
            assert_eq!(a + b + c, n);
        }
    }

    #[test]
    fn split_partitions_without_overlap() {
        let ds = dataset(103);
        let (train, val, test) = split_dataset(&ds, &SplitSpec::new(8, 1, 1, 7)).unwrap();
        let ids = |d: &Dataset| d.instances.iter().map(|i| i.id.clone()).collect::<BTreeSet<_>>();
        let (a, b, c) = (ids(&train), ids(&val), ids(&test));
        assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        assert_eq!(a.len() + b.len() + c.len(), 103);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let ds = dataset(50);
        let spec = SplitSpec::new(8, 1, 1, 42);
        let (t1, v1, s1) = split_dataset(&ds, &spec).unwrap();
        let (t2, v2, s2) = split_dataset(&ds, &spec).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(v1, v2);
        assert_eq!(s1, s2);

        let other = SplitSpec::new(8, 1, 1, 43);
        let (t3, _, _) = split_dataset(&ds, &other).unwrap();
        assert_ne!(t1.instances, t3.instances, "different seeds should shuffle differently");
    }

    #[test]
    fn splits_preserve_corpus_order() {
        let ds = dataset(60);
        let (train, _, _) = split_dataset(&ds, &SplitSpec::new(8, 1, 1, 3)).unwrap();
        let ids: Vec<_> = train.instances.iter().map(|i| i.id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn splits_keep_only_referenced_units() {
        let ds = dataset(4);
        let (train, val, test) = split_dataset(&ds, &SplitSpec::new(2, 1, 1, 0)).unwrap();
        for part in [&train, &val, &test] {
            let referenced: BTreeSet<_> = part.instances.iter().map(|i| i.unit_id.clone()).collect();
            let kept: BTreeSet<_> = part.units.keys().cloned().collect();
            assert_eq!(referenced, kept);
        }
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let err = split_dataset(&Dataset::default(), &SplitSpec::default());
        assert!(matches!(err, Err(super::super::CorpusError::EmptyDataset)));
    }
}
