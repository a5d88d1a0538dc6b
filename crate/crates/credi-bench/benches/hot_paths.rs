//! Hot-path benchmarks: retrieval, scoring, segmentation, embedding.

use std::collections::BTreeSet;
use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, Criterion};

use credi_bench::{random_index, random_labels, synth_dataset};
use credi_core::dialogue::{segment_dialogue_chains, SegmenterConfig};
use credi_core::evaluation::weighted_f1;
use credi_core::prompting::{PromptConfig, PromptMode};
use credi_core::retrieval::{build_index, topk, Embedder, HashEmbedder};
use credi_core::{DialogueVariant, Locale};

fn bench_topk(c: &mut Criterion) {
    let (index, query) = random_index(1_000, 256, 1);
    c.bench_function("topk_1000x256_k5", |b| {
        b.iter(|| topk(black_box(&index), black_box(&query), 5).unwrap())
    });
}

fn bench_weighted_f1(c: &mut Criterion) {
    let (gold, pred) = random_labels(10_000, 2);
    let classes = [0u8, 1, 2];
    c.bench_function("weighted_f1_10k", |b| {
        b.iter(|| weighted_f1(black_box(&gold), black_box(&pred), &classes).unwrap())
    });
}

fn bench_segmentation(c: &mut Criterion) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/novel_sample.txt");
    let text = std::fs::read_to_string(path).unwrap();
    let roster: BTreeSet<String> =
        ["沈青崖", "陆明霞", "韩铁心", "霍长青"].iter().map(|s| s.to_string()).collect();
    let cfg = SegmenterConfig { chapter_marker: Some("^第.+章".into()), ..Default::default() };
    c.bench_function("segment_sample_novel", |b| {
        b.iter(|| segment_dialogue_chains(black_box(&text), &roster, &cfg, "sample"))
    });
}

fn bench_hash_embedder(c: &mut Criterion) {
    let embedder = HashEmbedder::new(256);
    let text = "沈青崖道：“山高路远，何必急在一时。”陆明霞摇头不语。";
    c.bench_function("hash_embed_256", |b| b.iter(|| embedder.embed(black_box(text)).unwrap()));
}

fn bench_build_index(c: &mut Criterion) {
    let ds = synth_dataset(200);
    let cfg = PromptConfig::new(PromptMode::Joint, DialogueVariant::Expanded, 3, Locale::Zh);
    let embedder = HashEmbedder::new(256);
    c.bench_function("build_index_200", |b| {
        b.iter(|| build_index(black_box(&ds), &cfg, &embedder).unwrap())
    });
}

criterion_group!(
    benches,
    bench_topk,
    bench_weighted_f1,
    bench_segmentation,
    bench_hash_embedder,
    bench_build_index
);
criterion_main!(benches);
