//! CTC forced alignment: align transcript characters to frame-level
//! emission log-probabilities and derive per-word timestamps.
//!
//! Words are tokenized to character labels, joined with the word-delimiter
//! label, and aligned with a Viterbi pass over the blank-interleaved state
//! sequence. Words whose characters are absent from the vocabulary get
//! their spans interpolated between their aligned neighbors.

use thiserror::Error;

use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignError {
    #[error("no valid alignment path: {frames} frames for a minimum of {required}")]
    InfeasibleLength { frames: usize, required: usize },
    #[error("invalid label vocabulary: {0}")]
    InvalidVocab(String),
    #[error("invalid emission matrix: {0}")]
    InvalidEmissions(String),
    #[error("token value {value} at position {index} is not a non-blank label index")]
    InvalidToken { index: usize, value: usize },
    #[error("emissions cover {have_s} s but the chunk needs {need_s} s")]
    EmissionsTooShort { have_s: f64, need_s: f64 },
}

/// CTC label set: blank fixed at index 0, one label per output symbol, a
/// word-delimiter ("|" or " ") somewhere in the set.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVocab {
    labels: Vec<String>,
    delimiter: usize,
}

impl LabelVocab {
    pub const BLANK: usize = 0;

    pub fn new(labels: Vec<String>) -> Result<Self, AlignError> {
        if labels.len() < 2 {
            return Err(AlignError::InvalidVocab("need at least blank and one label".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(AlignError::InvalidVocab(format!("duplicate label {l:?}")));
            }
        }
        let delimiter = labels
            .iter()
            .position(|l| l == "|" || l == " ")
            .ok_or_else(|| AlignError::InvalidVocab("no word-delimiter label ('|')".into()))?;
        if delimiter == Self::BLANK {
            return Err(AlignError::InvalidVocab("delimiter cannot be the blank".into()));
        }
        Ok(LabelVocab { labels, delimiter })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn delimiter_index(&self) -> usize {
        self.delimiter
    }

    /// Label index for a text character; blank and delimiter never match.
    pub fn index_of_char(&self, c: char) -> Option<usize> {
        self.labels.iter().position(|l| {
            let mut chars = l.chars();
            chars.next() == Some(c) && chars.next().is_none()
        }).filter(|&i| i != Self::BLANK && i != self.delimiter)
    }
}

/// T×V frame log-probabilities plus the vocabulary they index into.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionMatrix {
    vocab: LabelVocab,
    frame_duration_s: f64,
    num_frames: usize,
    log_probs: Vec<f64>, // row-major T×V
}

impl EmissionMatrix {
    pub fn new(
        vocab: LabelVocab,
        frame_duration_s: f64,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, AlignError> {
        if rows.is_empty() {
            return Err(AlignError::InvalidEmissions("need at least one frame".into()));
        }
        if !(frame_duration_s.is_finite() && frame_duration_s > 0.0) {
            return Err(AlignError::InvalidEmissions(format!(
                "frame_duration_s must be positive, got {frame_duration_s}"
            )));
        }
        let v = vocab.len();
        let mut log_probs = Vec::with_capacity(rows.len() * v);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != v {
                return Err(AlignError::InvalidEmissions(format!(
                    "frame {t} has {} values, vocabulary has {v}",
                    row.len()
                )));
            }
            // each row must be a log-normalized distribution
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = if max == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
            };
            if !(lse.is_finite() && lse.abs() <= 1e-3) {
                return Err(AlignError::InvalidEmissions(format!(
                    "frame {t} is not log-normalized (log-sum-exp {lse})"
                )));
            }
            log_probs.extend_from_slice(row);
        }
        Ok(EmissionMatrix { vocab, frame_duration_s, num_frames: rows.len(), log_probs })
    }

    pub fn vocab(&self) -> &LabelVocab {
        &self.vocab
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_labels(&self) -> usize {
        self.vocab.len()
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.frame_duration_s
    }

    pub fn duration_s(&self) -> f64 {
        self.num_frames as f64 * self.frame_duration_s
    }

    pub fn log_prob(&self, frame: usize, label: usize) -> f64 {
        self.log_probs[frame * self.vocab.len() + label]
    }
}

/// One transcript word together with its in-vocabulary character labels.
/// Empty labels mean the word is out of vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedWord {
    pub text: String,
    pub labels: Vec<usize>,
}

impl TokenizedWord {
    pub fn is_oov(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Lowercase, map each character to its label, drop characters the
/// vocabulary cannot express. Words losing all characters stay in the list
/// as out-of-vocabulary markers.
pub fn tokenize_for_alignment(text: &str, vocab: &LabelVocab) -> Vec<TokenizedWord> {
    text.split_whitespace()
        .map(|w| {
            let labels = w
                .chars()
                .flat_map(char::to_lowercase)
                .filter_map(|c| vocab.index_of_char(c))
                .collect();
            TokenizedWord { text: w.to_string(), labels }
        })
        .collect()
}

/// Best CTC state path: `states[t]` indexes the blank-interleaved extended
/// sequence (even = blank, odd = token (state−1)/2).
#[derive(Debug, Clone, PartialEq)]
pub struct CtcPath {
    pub states: Vec<usize>,
    pub log_prob: f64,
}

/// Viterbi over the extended sequence with the standard CTC transitions:
/// stay, advance one, or skip a blank when the target token differs from
/// the one two states back. Ties prefer the smaller state index, making the
/// path unique and deterministic.
pub fn ctc_align(emissions: &EmissionMatrix, tokens: &[usize]) -> Result<CtcPath, AlignError> {
    let t_max = emissions.num_frames();
    let v = emissions.num_labels();
    for (index, &value) in tokens.iter().enumerate() {
        if value == LabelVocab::BLANK || value >= v {
            return Err(AlignError::InvalidToken { index, value });
        }
    }
    let n = tokens.len();
    if n == 0 {
        // nothing to align: the only path is all blanks
        let log_prob = (0..t_max).map(|t| emissions.log_prob(t, LabelVocab::BLANK)).sum();
        return Ok(CtcPath { states: vec![0; t_max], log_prob });
    }
    let repeats = tokens.windows(2).filter(|w| w[0] == w[1]).count();
    let required = n + repeats;
    if t_max < required {
        return Err(AlignError::InfeasibleLength { frames: t_max, required });
    }

    let s_count = 2 * n + 1;
    let state_label = |s: usize| if s % 2 == 1 { tokens[(s - 1) / 2] } else { LabelVocab::BLANK };
    let labels: Vec<usize> = (0..s_count).map(state_label).collect();

    let mut prev = vec![f64::NEG_INFINITY; s_count];
    let mut prev_reach = vec![false; s_count];
    prev[0] = emissions.log_prob(0, labels[0]);
    prev_reach[0] = true;
    if s_count > 1 {
        prev[1] = emissions.log_prob(0, labels[1]);
        prev_reach[1] = true;
    }
    // backpointer per (t, s): how many states the path advanced into s
    let mut back = vec![0u8; t_max * s_count];
    let mut cur = vec![f64::NEG_INFINITY; s_count];
    let mut cur_reach = vec![false; s_count];
    for t in 1..t_max {
        for s in 0..s_count {
            let mut best = f64::NEG_INFINITY;
            let mut reached = false;
            let mut bp = 0u8;
            // smaller predecessor index first; strict '>' keeps it on ties
            if s >= 2 && s % 2 == 1 && labels[s] != labels[s - 2] && prev_reach[s - 2] {
                best = prev[s - 2];
                reached = true;
                bp = 2;
            }
            if s >= 1 && prev_reach[s - 1] && (!reached || prev[s - 1] > best) {
                best = prev[s - 1];
                reached = true;
                bp = 1;
            }
            if prev_reach[s] && (!reached || prev[s] > best) {
                best = prev[s];
                reached = true;
                bp = 0;
            }
            cur_reach[s] = reached;
            cur[s] = if reached { best + emissions.log_prob(t, labels[s]) } else { f64::NEG_INFINITY };
            back[t * s_count + s] = bp;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut prev_reach, &mut cur_reach);
    }

    // end states: last token or trailing blank, smaller index on ties
    let last_token = 2 * n - 1;
    let final_blank = 2 * n;
    debug_assert!(prev_reach[last_token]);
    let end = if !prev_reach[final_blank] || prev[last_token] >= prev[final_blank] {
        last_token
    } else {
        final_blank
    };

    let mut states = vec![0usize; t_max];
    let mut s = end;
    states[t_max - 1] = s;
    for t in (1..t_max).rev() {
        s -= back[t * s_count + s] as usize;
        states[t - 1] = s;
    }
    Ok(CtcPath { states, log_prob: prev[end] })
}

/// A word with its absolute time span, confidence and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedWord {
    pub word: String,
    pub start_s: f64,
    pub end_s: f64,
    /// Mean per-frame probability over the word's emitting frames, in
    /// [0, 1]; zero for interpolated words.
    pub score: f64,
    /// True when the span was interpolated rather than aligned.
    pub interpolated: bool,
}

/// Flatten tokenized words into one label sequence. Consecutive in-vocab
/// words are joined by a single delimiter token; a delimiter is also added
/// before the first (after the last) word when out-of-vocabulary words sit
/// at the edge, which guarantees every interpolation gap is at least one
/// frame wide.
fn flatten_words(
    words: &[TokenizedWord],
    vocab: &LabelVocab,
) -> (Vec<usize>, Vec<Option<(usize, usize)>>) {
    let delim = vocab.delimiter_index();
    let mut tokens = Vec::new();
    let mut spans = vec![None; words.len()];
    let Some(first) = words.iter().position(|w| !w.is_oov()) else {
        return (tokens, spans);
    };
    let last = words.iter().rposition(|w| !w.is_oov()).unwrap();
    if first > 0 {
        tokens.push(delim);
    }
    let mut any_emitted = false;
    for (i, w) in words.iter().enumerate() {
        if w.is_oov() {
            continue;
        }
        if any_emitted {
            tokens.push(delim);
        }
        let lo = tokens.len();
        tokens.extend(&w.labels);
        spans[i] = Some((lo, tokens.len()));
        any_emitted = true;
    }
    if last < words.len() - 1 {
        tokens.push(delim);
    }
    (tokens, spans)
}

/// Turn a CTC path back into word timings. Word start is the first frame of
/// its first character, end is one frame past the last; the score averages
/// exp(emission) over the word's emitting frames. OOV words are spread
/// evenly over the gap between their aligned neighbors (or the emission
/// window edges) and flagged as interpolated.
///
/// Times are computed chunk-locally and shifted once at the end, so adding
/// δ to `chunk_start_s` shifts every output time by exactly δ.
pub fn path_to_word_timings(
    path: &CtcPath,
    words: &[TokenizedWord],
    emissions: &EmissionMatrix,
    chunk_start_s: f64,
) -> Vec<AlignedWord> {
    let f = emissions.frame_duration_s();
    let (tokens, spans) = flatten_words(words, emissions.vocab());
    let mut first_frame = vec![usize::MAX; tokens.len()];
    let mut last_frame = vec![usize::MAX; tokens.len()];
    for (t, &state) in path.states.iter().enumerate() {
        if state % 2 == 1 {
            let token = (state - 1) / 2;
            if first_frame[token] == usize::MAX {
                first_frame[token] = t;
            }
            last_frame[token] = t;
        }
    }

    // aligned words first, in chunk-local time
    let mut local: Vec<Option<(f64, f64, f64)>> = vec![None; words.len()]; // (start, end, score)
    for (i, span) in spans.iter().enumerate() {
        let Some((lo, hi)) = span else { continue };
        debug_assert!(first_frame[*lo] != usize::MAX, "valid CTC path visits every token");
        let start = first_frame[*lo] as f64 * f;
        let end = (last_frame[hi - 1] + 1) as f64 * f;
        let mut prob_sum = 0.0;
        let mut frames = 0usize;
        for (t, &state) in path.states.iter().enumerate() {
            if state % 2 == 1 {
                let token = (state - 1) / 2;
                if (*lo..*hi).contains(&token) {
                    prob_sum += emissions.log_prob(t, tokens[token]).exp();
                    frames += 1;
                }
            }
        }
        let score = (prob_sum / frames as f64).clamp(0.0, 1.0);
        local[i] = Some((start, end, score));
    }

    // interpolate every run of OOV words into the surrounding gap
    let window_end = emissions.num_frames() as f64 * f;
    let mut out: Vec<Option<(f64, f64, f64, bool)>> =
        local.iter().map(|w| w.map(|(s, e, sc)| (s, e, sc, false))).collect();
    let mut k = 0;
    while k < words.len() {
        if out[k].is_some() {
            k += 1;
            continue;
        }
        let run_start = k;
        let mut run_end = k;
        while run_end < words.len() && out[run_end].is_none() {
            run_end += 1;
        }
        let gap_start = if run_start == 0 { 0.0 } else { out[run_start - 1].unwrap().1 };
        let gap_end =
            if run_end == words.len() { window_end } else { out[run_end].unwrap().0 };
        let count = (run_end - run_start) as f64;
        for (j, slot) in out[run_start..run_end].iter_mut().enumerate() {
            let s = gap_start + (gap_end - gap_start) * j as f64 / count;
            let e = gap_start + (gap_end - gap_start) * (j + 1) as f64 / count;
            *slot = Some((s, e, 0.0, true));
        }
        k = run_end;
    }

    words
        .iter()
        .zip(out)
        .map(|(w, slot)| {
            let (start, end, score, interpolated) = slot.unwrap();
            AlignedWord {
                word: w.text.clone(),
                start_s: chunk_start_s + start,
                end_s: chunk_start_s + end,
                score,
                interpolated,
            }
        })
        .collect()
}

/// Tokenize, align and extract word timings for one chunk's text.
pub fn align_chunk(
    text: &str,
    chunk_start_s: f64,
    emissions: &EmissionMatrix,
) -> Result<Vec<AlignedWord>, AlignError> {
    let words = tokenize_for_alignment(text, emissions.vocab());
    if words.is_empty() {
        return Ok(Vec::new());
    }
    let (tokens, _) = flatten_words(&words, emissions.vocab());
    let path = ctc_align(emissions, &tokens)?;
    Ok(path_to_word_timings(&path, &words, emissions, chunk_start_s))
}

const EMISSIONS_KIND: &str = "emissions file";

/// Emission file: `frames=T labels=V frame_duration_s=F` header, a label
/// line starting with the blank symbol `<pad>`, then T rows of V
/// log-probabilities.
pub fn parse_emissions(text: &str) -> Result<EmissionMatrix, ParseError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ParseError::new(EMISSIONS_KIND, 1, "missing header"))?;
    let mut frames = None;
    let mut labels = None;
    let mut frame_duration = None;
    for field in header.split_whitespace() {
        let Some((key, value)) = field.split_once('=') else {
            return Err(ParseError::new(EMISSIONS_KIND, 1, format!("bad header field {field:?}")));
        };
        match key {
            "frames" => {
                frames = Some(value.parse::<usize>().map_err(|_| {
                    ParseError::new(EMISSIONS_KIND, 1, format!("bad frames value {value:?}"))
                })?)
            }
            "labels" => {
                labels = Some(value.parse::<usize>().map_err(|_| {
                    ParseError::new(EMISSIONS_KIND, 1, format!("bad labels value {value:?}"))
                })?)
            }
            "frame_duration_s" => {
                frame_duration = Some(value.parse::<f64>().map_err(|_| {
                    ParseError::new(EMISSIONS_KIND, 1, format!("bad frame_duration_s {value:?}"))
                })?)
            }
            other => {
                return Err(ParseError::new(
                    EMISSIONS_KIND,
                    1,
                    format!("unknown header key {other:?}"),
                ))
            }
        }
    }
    let (Some(t), Some(v), Some(f)) = (frames, labels, frame_duration) else {
        return Err(ParseError::new(
            EMISSIONS_KIND,
            1,
            "header needs frames=, labels= and frame_duration_s=",
        ));
    };
    let label_line = lines
        .next()
        .ok_or_else(|| ParseError::new(EMISSIONS_KIND, 2, "missing label line"))?;
    let label_strs: Vec<String> = label_line.split_whitespace().map(str::to_string).collect();
    if label_strs.len() != v {
        return Err(ParseError::new(
            EMISSIONS_KIND,
            2,
            format!("expected {v} labels, found {}", label_strs.len()),
        ));
    }
    if label_strs.first().map(String::as_str) != Some("<pad>") {
        return Err(ParseError::new(EMISSIONS_KIND, 2, "first label must be the blank <pad>"));
    }
    let vocab = LabelVocab::new(label_strs)
        .map_err(|e| ParseError::new(EMISSIONS_KIND, 2, e.to_string()))?;
    let mut rows = Vec::with_capacity(t);
    for i in 0..t {
        let line_no = i + 3;
        let line = lines.next().ok_or_else(|| {
            ParseError::new(EMISSIONS_KIND, line_no, format!("expected {t} emission rows"))
        })?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    ParseError::new(EMISSIONS_KIND, line_no, format!("bad float {s:?}"))
                })
            })
            .collect::<Result<_, _>>()?;
        if row.len() != v {
            return Err(ParseError::new(
                EMISSIONS_KIND,
                line_no,
                format!("expected {v} values, found {}", row.len()),
            ));
        }
        rows.push(row);
    }
    if lines.next().is_some() {
        return Err(ParseError::new(EMISSIONS_KIND, t + 3, "trailing content after emission rows"));
    }
    EmissionMatrix::new(vocab, f, rows).map_err(|e| ParseError::new(EMISSIONS_KIND, 1, e.to_string()))
}

pub fn render_emissions(emissions: &EmissionMatrix) -> String {
    let mut out = format!(
        "frames={} labels={} frame_duration_s={}\n",
        emissions.num_frames(),
        emissions.num_labels(),
        emissions.frame_duration_s()
    );
    out.push_str(&emissions.vocab().labels().join(" "));
    out.push('\n');
    for t in 0..emissions.num_frames() {
        let row: Vec<String> =
            (0..emissions.num_labels()).map(|l| emissions.log_prob(t, l).to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(labels: &[&str]) -> LabelVocab {
        LabelVocab::new(labels.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn abc_vocab() -> LabelVocab {
        vocab(&["<pad>", "|", "a", "b", "c"])
    }

    /// Rows with probability `peak` on the given label, remainder uniform.
    fn peaked(vocab: LabelVocab, f: f64, peaks: &[usize], peak: f64) -> EmissionMatrix {
        let v = vocab.len();
        let rows = peaks
            .iter()
            .map(|&p| {
                (0..v)
                    .map(|l| {
                        if l == p { peak.ln() } else { ((1.0 - peak) / (v - 1) as f64).ln() }
                    })
                    .collect()
            })
            .collect();
        EmissionMatrix::new(vocab, f, rows).unwrap()
    }

    fn uniform(vocab: LabelVocab, f: f64, t: usize) -> EmissionMatrix {
        let v = vocab.len();
        let rows = vec![vec![(1.0 / v as f64).ln(); v]; t];
        EmissionMatrix::new(vocab, f, rows).unwrap()
    }

    #[test]
    fn vocab_validation() {
        assert!(LabelVocab::new(vec!["<pad>".into()]).is_err());
        assert!(matches!(
            LabelVocab::new(vec!["<pad>".into(), "a".into(), "a".into(), "|".into()]),
            Err(AlignError::InvalidVocab(_))
        ));
        assert!(LabelVocab::new(vec!["<pad>".into(), "a".into()]).is_err()); // no delimiter
        let v = abc_vocab();
        assert_eq!(v.index_of_char('a'), Some(2));
        assert_eq!(v.index_of_char('z'), None);
        assert_eq!(v.index_of_char('|'), None); // delimiter not reachable from text
        assert_eq!(v.delimiter_index(), 1);
    }

    #[test]
    fn tokenize_drops_unknown_chars_and_flags_oov() {
        let v = abc_vocab();
        let words = tokenize_for_alignment("Abba cab 123 ca\u{e9}b", &v);
        assert_eq!(words.len(), 4);
        assert_eq!(words[0].labels, vec![2, 3, 3, 2]);
        assert_eq!(words[1].labels, vec![4, 2, 3]);
        assert!(words[2].is_oov());
        // only the unknown character vanishes; the word stays aligned
        assert!(!words[3].is_oov());
        assert_eq!(words[3].labels, vec![4, 2, 3]);
        assert_eq!(words[3].text, "ca\u{e9}b");
    }

    #[test]
    fn emission_matrix_rejects_unnormalized_rows() {
        let v = abc_vocab();
        let bad = vec![vec![0.0; 5]]; // log 1.0 each, sums to 5
        assert!(matches!(
            EmissionMatrix::new(v.clone(), 0.02, bad),
            Err(AlignError::InvalidEmissions(_))
        ));
        assert!(EmissionMatrix::new(v.clone(), 0.02, vec![]).is_err());
        assert!(EmissionMatrix::new(v, 0.0, vec![vec![(0.2f64).ln(); 5]]).is_err());
    }

    #[test]
    fn single_frame_single_token() {
        let em = peaked(abc_vocab(), 0.02, &[2], 0.9);
        let path = ctc_align(&em, &[2]).unwrap();
        assert_eq!(path.states, vec![1]);
        assert_eq!(path.log_prob, em.log_prob(0, 2));
    }

    #[test]
    fn peaked_three_frames_two_tokens() {
        // frames peaked a, b, b: best path emits a then stays on b
        let em = peaked(abc_vocab(), 0.02, &[2, 3, 3], 0.97);
        let path = ctc_align(&em, &[2, 3]).unwrap();
        let labels: Vec<usize> = path
            .states
            .iter()
            .map(|&s| if s % 2 == 1 { [2, 3][(s - 1) / 2] } else { 0 })
            .collect();
        assert_eq!(labels, vec![2, 3, 3]);
        let expected = em.log_prob(0, 2) + em.log_prob(1, 3) + em.log_prob(2, 3);
        assert_eq!(path.log_prob, expected);
    }

    #[test]
    fn uniform_repeated_token_takes_smallest_tie_path() {
        // all paths have equal probability; the tie rules pin down one
        let em = uniform(abc_vocab(), 0.02, 4);
        let path = ctc_align(&em, &[2, 2]).unwrap();
        assert_eq!(path.states, vec![0, 1, 2, 3]);
        let u = (0.2f64).ln();
        assert_eq!(path.log_prob, u + u + u + u);
    }

    #[test]
    fn repeated_tokens_need_separating_blank() {
        let em = uniform(abc_vocab(), 0.02, 2);
        assert_eq!(
            ctc_align(&em, &[2, 2]),
            Err(AlignError::InfeasibleLength { frames: 2, required: 3 })
        );
    }

    #[test]
    fn empty_token_sequence_aligns_to_blanks() {
        let em = uniform(abc_vocab(), 0.02, 3);
        let path = ctc_align(&em, &[]).unwrap();
        assert_eq!(path.states, vec![0, 0, 0]);
    }

    #[test]
    fn blank_or_out_of_range_tokens_are_rejected() {
        let em = uniform(abc_vocab(), 0.02, 3);
        assert!(matches!(ctc_align(&em, &[0]), Err(AlignError::InvalidToken { .. })));
        assert!(matches!(ctc_align(&em, &[9]), Err(AlignError::InvalidToken { .. })));
    }

    #[test]
    fn word_timings_from_peaked_path() {
        // words [ab][c]; frames peaked a, b, delimiter, c
        let em = peaked(abc_vocab(), 0.02, &[2, 3, 1, 4], 0.97);
        let words = align_chunk("ab c", 0.0, &em).unwrap();
        assert_eq!(words.len(), 2);
        assert!((words[0].start_s - 0.0).abs() < 1e-12);
        assert!((words[0].end_s - 0.04).abs() < 1e-12);
        assert!((words[1].start_s - 0.06).abs() < 1e-12);
        assert!((words[1].end_s - 0.08).abs() < 1e-12);
        assert!(words.iter().all(|w| !w.interpolated));
        // score is the mean frame probability, here 0.97 per emitting frame
        assert!((words[0].score - 0.97).abs() < 1e-9);
    }

    #[test]
    fn single_char_word_on_single_frame() {
        let em = peaked(abc_vocab(), 0.02, &[2], 0.9);
        let words = align_chunk("a", 0.0, &em).unwrap();
        assert_eq!(words.len(), 1);
        assert!((words[0].end_s - 0.02).abs() < 1e-12);
        assert!(align_chunk("", 0.0, &em).unwrap().is_empty());
    }

    #[test]
    fn middle_oov_word_is_interpolated_between_neighbors() {
        // "a" fills [0,1.0), delimiter [1.0,2.0), "b" [2.0,3.0): the OOV
        // word sits exactly in the delimiter gap
        let f = 0.02;
        let mut peaks = vec![2usize; 50];
        peaks.extend(vec![1; 50]);
        peaks.extend(vec![3; 50]);
        let em = peaked(abc_vocab(), f, &peaks, 0.97);
        let words = align_chunk("a 42 b", 0.0, &em).unwrap();
        assert_eq!(words.len(), 3);
        assert!(!words[0].interpolated && !words[2].interpolated);
        assert!(words[1].interpolated);
        assert_eq!(words[1].score, 0.0);
        assert!((words[0].end_s - 1.0).abs() < 1e-9);
        assert!((words[1].start_s - 1.0).abs() < 1e-9);
        assert!((words[1].end_s - 2.0).abs() < 1e-9);
        assert!((words[2].start_s - 2.0).abs() < 1e-9);
    }

    #[test]
    fn all_oov_words_spread_over_the_window() {
        let em = uniform(abc_vocab(), 0.5, 4); // 2 s window
        let words = align_chunk("1 2", 0.0, &em).unwrap();
        assert_eq!(words.len(), 2);
        assert!(words.iter().all(|w| w.interpolated));
        assert!((words[0].start_s - 0.0).abs() < 1e-12);
        assert!((words[0].end_s - 1.0).abs() < 1e-12);
        assert!((words[1].start_s - 1.0).abs() < 1e-12);
        assert!((words[1].end_s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn edge_oov_words_get_nonempty_spans() {
        let em = uniform(abc_vocab(), 0.02, 10);
        for text in ["1 a", "a 1", "1 ab ba 2"] {
            let words = align_chunk(text, 0.0, &em).unwrap();
            assert_eq!(words.len(), text.split_whitespace().count());
            for w in &words {
                assert!(w.start_s < w.end_s, "{text}: degenerate span for {:?}", w.word);
            }
            for pair in words.windows(2) {
                assert!(pair[0].end_s <= pair[1].start_s + 1e-12, "{text}: overlap");
            }
        }
    }

    #[test]
    fn offset_shift_is_exact() {
        let em = peaked(abc_vocab(), 0.02, &[2, 3, 1, 4, 1, 2], 0.9);
        let base = align_chunk("ab c 7 a", 0.0, &em).unwrap();
        let delta = 123.456;
        let shifted = align_chunk("ab c 7 a", delta, &em).unwrap();
        for (b, s) in base.iter().zip(&shifted) {
            assert_eq!(s.start_s, delta + b.start_s);
            assert_eq!(s.end_s, delta + b.end_s);
        }
    }

    #[test]
    fn emissions_file_round_trip() {
        let em = peaked(abc_vocab(), 0.02, &[2, 3, 1, 4], 0.9);
        let text = render_emissions(&em);
        assert!(text.starts_with("frames=4 labels=5 frame_duration_s=0.02\n<pad> | a b c\n"));
        let parsed = parse_emissions(&text).unwrap();
        assert_eq!(parsed, em);
    }

    #[test]
    fn emissions_file_rejects_malformed_input() {
        assert!(parse_emissions("").is_err());
        assert!(parse_emissions("frames=1 labels=2\n<pad> |\n0.0 0.0\n").is_err());
        let missing_row = "frames=2 labels=2 frame_duration_s=0.02\n<pad> |\n-0.7 -0.7\n";
        assert!(parse_emissions(missing_row).is_err());
        let wrong_blank = "frames=1 labels=2 frame_duration_s=0.02\nblank |\n-0.7 -0.7\n";
        assert!(parse_emissions(wrong_blank).is_err());
        let trailing = "frames=1 labels=2 frame_duration_s=0.02\n<pad> |\n-0.7 -0.7\nextra\n";
        assert!(parse_emissions(trailing).is_err());
    }
}
