use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use longform_bench::{bench_vocab, random_emissions, random_probs, SplitMix64};
use longform_core::alignment::{ctc_align, tokenize_for_alignment};
use longform_core::normalize::{normalize, NormalizerConfig};
use longform_core::scoring::edit_align;
use longform_core::segmentation::{plan_chunks, SegmentationConfig};

fn bench_ctc_align(c: &mut Criterion) {
    let mut group = c.benchmark_group("ctc_align");
    let vocab = bench_vocab();
    let text = "the quick brown fox jumps over the lazy dog again and again";
    let words = tokenize_for_alignment(text, &vocab);
    let tokens: Vec<usize> = {
        let mut t = Vec::new();
        for (i, w) in words.iter().enumerate() {
            if i > 0 {
                t.push(vocab.delimiter_index());
            }
            t.extend(&w.labels);
        }
        t
    };
    for frames in [250usize, 1000] {
        let em = random_emissions(frames, 7);
        group.bench_with_input(BenchmarkId::from_parameter(frames), &frames, |b, _| {
            b.iter(|| ctc_align(black_box(&em), black_box(&tokens)).unwrap())
        });
    }
    group.finish();
}

fn bench_edit_align(c: &mut Criterion) {
    let mut group = c.benchmark_group("edit_align");
    let mut rng = SplitMix64(11);
    for len in [100usize, 1000] {
        let reference: Vec<u32> = (0..len).map(|_| (rng.next_u64() % 50) as u32).collect();
        let hypothesis: Vec<u32> = reference
            .iter()
            .map(|&w| if rng.next_f64() < 0.1 { (rng.next_u64() % 50) as u32 } else { w })
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, _| {
            b.iter(|| edit_align(black_box(&reference), black_box(&hypothesis)))
        });
    }
    group.finish();
}

fn bench_plan_chunks(c: &mut Criterion) {
    let mut group = c.benchmark_group("plan_chunks");
    let cfg = SegmentationConfig::default();
    for frames in [30_000usize, 180_000] {
        // 10 min and 1 h of 20 ms frames
        let probs = random_probs(frames, 23);
        group.bench_with_input(BenchmarkId::from_parameter(frames), &frames, |b, _| {
            b.iter(|| plan_chunks(black_box(&probs), black_box(&cfg)).unwrap())
        });
    }
    group.finish();
}

fn bench_normalize(c: &mut Criterion) {
    let cfg = NormalizerConfig::default();
    let text = "Well, I saw 123 ducks [quacking] at 3.5 km on May 21st, \
                and twenty one of them had escaped from pen 007 (somehow).";
    let long_text = text.repeat(20);
    c.bench_function("normalize", |b| {
        b.iter(|| normalize(black_box(&long_text), black_box(&cfg)).unwrap())
    });
}

criterion_group!(benches, bench_ctc_align, bench_edit_align, bench_plan_chunks, bench_normalize);
criterion_main!(benches);
