//! Benchmark-only crate; see `benches/core_ops.rs`.
//!
//! Shared input builders live here so future benches can reuse them.

use longform_core::alignment::{EmissionMatrix, LabelVocab};
use longform_core::segmentation::FrameProbSeries;

/// Deterministic pseudo-random stream, good enough for bench inputs
/// without pulling RNG crates into the library graph.
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

pub fn bench_vocab() -> LabelVocab {
    let mut labels: Vec<String> = vec!["<pad>".into(), "|".into()];
    labels.extend(('a'..='z').map(|c| c.to_string()));
    labels.push("'".into());
    LabelVocab::new(labels).unwrap()
}

/// Random log-normalized emissions, `frames` x vocab.
pub fn random_emissions(frames: usize, seed: u64) -> EmissionMatrix {
    let vocab = bench_vocab();
    let v = vocab.len();
    let mut rng = SplitMix64(seed);
    let rows: Vec<Vec<f64>> = (0..frames)
        .map(|_| {
            let raw: Vec<f64> = (0..v).map(|_| rng.next_f64() + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|x| (x / total).ln()).collect()
        })
        .collect();
    EmissionMatrix::new(vocab, 0.02, rows).unwrap()
}

/// Noisy on/off speech probabilities, `frames` x 20 ms.
pub fn random_probs(frames: usize, seed: u64) -> FrameProbSeries {
    let mut rng = SplitMix64(seed);
    let mut on = false;
    let probs: Vec<f64> = (0..frames)
        .map(|_| {
            if rng.next_f64() < 0.01 {
                on = !on;
            }
            if on {
                0.7 + 0.3 * rng.next_f64()
            } else {
                0.3 * rng.next_f64()
            }
        })
        .collect();
    FrameProbSeries::new(0.02, probs).unwrap()
}
