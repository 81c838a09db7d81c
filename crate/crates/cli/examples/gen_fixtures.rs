//! Regenerates the committed test fixtures under `tests/fixtures/`:
//! a synthetic speech-probability track, the chunk-aligned transcription
//! manifest, per-chunk emission matrices and a small scoring corpus.
//!
//! Everything is deterministic; run it after changing fixture recipes:
//! `cargo run -p longform-cli --example gen_fixtures`

use std::path::{Path, PathBuf};

use longform_core::alignment::{render_emissions, EmissionMatrix, LabelVocab};
use longform_core::segmentation::{plan_chunks, render_probs, SegmentationConfig};
use longform_core::FrameProbSeries;

const FRAME_S: f64 = 0.02;
const SPEECH: f64 = 0.9;
const DIP: f64 = 0.55;
const SILENCE: f64 = 0.05;

/// Speech bursts as frame ranges, with low-probability dips that the
/// cut search should pick as split points.
const BURSTS: &[(usize, usize)] = &[
    (25, 325),    // 0.5 - 6.5 s, exactly one max-length chunk
    (350, 660),   // 7.0 - 13.2 s, dip forces a cut at 10.0 s
    (675, 710),   // 13.5 - 14.2 s, short tail merged with the previous piece
    (800, 1200),  // 16.0 - 24.0 s, dip at 19.0 s
    (1230, 1550), // 24.6 - 31.0 s, dip at 27.5 s
    (1650, 1975), // 33.0 - 39.5 s, dip at 36.0 s
    (2010, 2250), // 40.2 - 45.0 s
    (2300, 2590), // 46.0 - 51.8 s
    (2650, 2930), // 53.0 - 58.6 s
];
const DIPS: &[(usize, usize)] = &[(500, 505), (950, 955), (1375, 1380), (1800, 1805)];

const CHUNK_TEXTS: &[&str] = &[
    "hello there everyone",
    "we counted 21 ducks",
    "it's fine honestly",
    "chapter 7 begins now",
    "the quick brown fox",
    "jumps over 2 lazy dogs",
    "numbers like 123 stay tricky",
    "a short bit",
    "wrapping up part 1",
    "nearly done here",
    "one more stretch to go",
    "goodbye and thanks",
];

fn fixture_probs() -> FrameProbSeries {
    let mut probs = vec![SILENCE; 3000];
    for &(lo, hi) in BURSTS {
        for p in &mut probs[lo..hi] {
            *p = SPEECH;
        }
    }
    for &(lo, hi) in DIPS {
        for p in &mut probs[lo..hi] {
            *p = DIP;
        }
    }
    FrameProbSeries::new(FRAME_S, probs).unwrap()
}

fn fixture_vocab() -> LabelVocab {
    let mut labels: Vec<String> = vec!["<pad>".into(), "|".into()];
    labels.extend(('a'..='z').map(|c| c.to_string()));
    labels.push("'".into());
    LabelVocab::new(labels).unwrap()
}

/// Character labels for the text, words joined by the delimiter; digits and
/// anything else outside the vocabulary simply vanish (those words are
/// interpolated at alignment time).
fn token_sequence(text: &str, vocab: &LabelVocab) -> Vec<usize> {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let labels: Vec<usize> = word.chars().filter_map(|c| vocab.index_of_char(c)).collect();
        if labels.is_empty() {
            continue;
        }
        if !tokens.is_empty() {
            tokens.push(vocab.delimiter_index());
        }
        tokens.extend(labels);
    }
    tokens
}

/// Emissions peaked (p = 0.9) on the token sequence spread evenly over the
/// frames. Log values are rounded to 1e-6 to keep the files compact; rows
/// stay normalized well within the 1e-3 tolerance.
fn chunk_emissions(text: &str, duration_s: f64, vocab: &LabelVocab) -> EmissionMatrix {
    let frames = (duration_s / FRAME_S).round() as usize;
    let tokens = token_sequence(text, vocab);
    assert!(frames >= 2 * tokens.len() + 2, "chunk too short for its text: {text:?}");
    let v = vocab.len();
    let round6 = |x: f64| (x * 1e6).round() / 1e6;
    let peak = round6(SPEECH.ln());
    let rest = round6(((1.0 - SPEECH) / (v - 1) as f64).ln());
    let rows: Vec<Vec<f64>> = (0..frames)
        .map(|t| {
            let target = tokens[t * tokens.len() / frames];
            (0..v).map(|l| if l == target { peak } else { rest }).collect()
        })
        .collect();
    EmissionMatrix::new(vocab.clone(), FRAME_S, rows).unwrap()
}

fn write(path: &Path, content: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, content).unwrap();
    println!("wrote {}", path.display());
}

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");

    let seg_conf = "max_chunk_s=6.0\nmin_cut_piece_s=1.0\n";
    write(&root.join("seg.conf"), seg_conf);
    let cfg = SegmentationConfig { max_chunk_s: 6.0, min_cut_piece_s: 1.0, ..Default::default() };

    let probs = fixture_probs();
    write(&root.join("probs.txt"), &render_probs(&probs));

    let chunks = plan_chunks(&probs, &cfg).unwrap();
    assert_eq!(
        chunks.len(),
        CHUNK_TEXTS.len(),
        "chunk plan changed; update CHUNK_TEXTS to match"
    );

    let mut manifest = String::new();
    for (i, text) in CHUNK_TEXTS.iter().enumerate() {
        manifest.push_str(&format!("{i}\t{text}\n"));
    }
    write(&root.join("manifest.tsv"), &manifest);

    let vocab = fixture_vocab();
    for (chunk, text) in chunks.iter().zip(CHUNK_TEXTS) {
        let em = chunk_emissions(text, chunk.end_s() - chunk.start_s(), &vocab);
        write(
            &root.join(format!("emissions/chunk_{}.emis", chunk.index())),
            &render_emissions(&em),
        );
    }

    // scoring corpus: hypotheses differ from references only by digit
    // forms, punctuation and case, so normalization closes the gap exactly
    let score_pairs: &[(&str, &str, &str)] = &[
        ("a", "we counted twenty one ducks on the pond", "We counted 21 ducks, on the pond."),
        ("b", "it's chapter seven now", "It's chapter 7 now"),
        ("c", "three point five kilometers exactly", "3.5 kilometers exactly!"),
    ];
    let mut pairs_tsv = String::new();
    for (id, reference, hypothesis) in score_pairs {
        write(&root.join(format!("score/{id}.ref.txt")), &format!("{reference}\n"));
        write(&root.join(format!("score/{id}.hyp.txt")), &format!("{hypothesis}\n"));
        pairs_tsv.push_str(&format!("{id}\t{id}.ref.txt\t{id}.hyp.txt\n"));
    }
    write(&root.join("score/pairs.tsv"), &pairs_tsv);

    write(
        &root.join("rules.glm"),
        "gonna => going to ;; casual contraction\nkinda => kind of / kind a ;; first form wins\n",
    );

    println!("{} chunks planned:", chunks.len());
    for c in &chunks {
        println!("  {}: {:.3} - {:.3} ({} segments)", c.index(), c.start_s(), c.end_s(), c.segments().len());
    }
}
