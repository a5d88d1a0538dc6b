//! Deterministic input generators for the benchmark suite.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use credi_core::corpus::{
    Dataset, DialogueUnit, Hierarchy, LabelSet, Polarity, Quote, RelType, RelationInstance,
};
use credi_core::retrieval::{EmbeddingVector, RetrievalIndex};

/// Random vectors packed into an index, plus one query, all seeded.
pub fn random_index(n: usize, dim: usize, seed: u64) -> (RetrievalIndex, EmbeddingVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vector = |rng: &mut ChaCha8Rng| EmbeddingVector {
        values: (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
    };
    let entries = (0..n).map(|i| (format!("e{i:05}"), vector(&mut rng))).collect();
    let query = vector(&mut rng);
    (RetrievalIndex { dim, embedder: "bench".into(), entries }, query)
}

/// Paired gold/prediction label sequences over three classes.
pub fn random_labels(n: usize, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gold = (0..n).map(|_| rng.random_range(0..3)).collect();
    let pred = (0..n).map(|_| rng.random_range(0..3)).collect();
    (gold, pred)
}

/// A synthetic labeled dataset: one single-quote unit per instance.
pub fn synth_dataset(n: usize) -> Dataset {
    let units: Vec<DialogueUnit> = (0..n)
        .map(|i| {
            let utterance = format!("第{i}回的对白内容。");
            let context = format!("“{utterance}”");
            let span = (3, 3 + utterance.len());
            DialogueUnit {
                id: format!("u{i:05}"),
                novel_id: "bench".into(),
                quotes: vec![Quote {
                    speaker: "甲".into(),
                    addressee: Some("乙".into()),
                    utterance,
                    span,
                }],
                context,
            }
        })
        .collect();
    let instances = (0..n)
        .map(|i| RelationInstance {
            id: format!("r{i:05}"),
            unit_id: format!("u{i:05}"),
            subject: "甲".into(),
            object: "乙".into(),
            gold: Some(LabelSet::new(Polarity::Positive, RelType::Affiliative, Hierarchy::Peer)),
            predicted: None,
        })
        .collect();
    Dataset::from_parts(units, instances).unwrap()
}
