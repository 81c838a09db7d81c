//! From frame-level speech probabilities to bounded transcription chunks.
//!
//! Three stages: hysteresis binarization turns probabilities into voice
//! segments, over-long segments are cut at their least-active frame, and the
//! pieces are packed greedily into chunks of at most `max_chunk_s` seconds.

use std::collections::VecDeque;

use thiserror::Error;

use crate::error::ParseError;
use crate::TIME_EPS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SegmentationError {
    #[error("audio input is empty")]
    EmptyAudio,
    #[error("invalid segmentation parameter: {0}")]
    InvalidConfig(String),
    #[error("max_chunk_s {max_chunk_s} is smaller than twice min_cut_piece_s {min_cut_piece_s}")]
    InfeasibleCut { max_chunk_s: f64, min_cut_piece_s: f64 },
    #[error("segment list unsorted or overlapping at index {index}")]
    UnsortedInput { index: usize },
    #[error("invalid segment bounds [{start_s}, {end_s}]")]
    InvalidSegment { start_s: f64, end_s: f64 },
    #[error("segment [{start_s}, {end_s}] extends past the probability series ({duration_s} s)")]
    SegmentOutOfRange { start_s: f64, end_s: f64, duration_s: f64 },
    #[error("chunk must contain at least one segment")]
    EmptyChunk,
}

/// Per-frame speech probabilities at a fixed frame duration.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameProbSeries {
    frame_duration_s: f64,
    probs: Vec<f64>,
}

impl FrameProbSeries {
    pub fn new(frame_duration_s: f64, probs: Vec<f64>) -> Result<Self, SegmentationError> {
        if !(frame_duration_s.is_finite() && frame_duration_s > 0.0) {
            return Err(SegmentationError::InvalidConfig(format!(
                "frame_duration_s must be positive, got {frame_duration_s}"
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(SegmentationError::InvalidConfig(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        Ok(FrameProbSeries { frame_duration_s, probs })
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.frame_duration_s
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.probs.len() as f64 * self.frame_duration_s
    }
}

/// A contiguous stretch of detected speech, in absolute seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoiceSegment {
    start_s: f64,
    end_s: f64,
}

impl VoiceSegment {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self, SegmentationError> {
        if !(start_s.is_finite() && end_s.is_finite() && 0.0 <= start_s && start_s < end_s) {
            return Err(SegmentationError::InvalidSegment { start_s, end_s });
        }
        Ok(VoiceSegment { start_s, end_s })
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    pub fn end_s(&self) -> f64 {
        self.end_s
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// A group of voice segments packed together for one transcription call.
/// Spans from the first segment's start to the last segment's end.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioChunk {
    index: usize,
    start_s: f64,
    end_s: f64,
    segments: Vec<VoiceSegment>,
}

impl AudioChunk {
    pub fn from_segments(
        index: usize,
        segments: Vec<VoiceSegment>,
    ) -> Result<Self, SegmentationError> {
        let first = segments.first().ok_or(SegmentationError::EmptyChunk)?;
        for i in 1..segments.len() {
            if segments[i].start_s < segments[i - 1].end_s {
                return Err(SegmentationError::UnsortedInput { index: i });
            }
        }
        Ok(AudioChunk {
            index,
            start_s: first.start_s,
            end_s: segments.last().unwrap().end_s,
            segments,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    pub fn end_s(&self) -> f64 {
        self.end_s
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn segments(&self) -> &[VoiceSegment] {
        &self.segments
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationConfig {
    /// Probability at or above which a speech region opens.
    pub onset: f64,
    /// Probability below which an open region closes.
    pub offset: f64,
    /// Regions shorter than this are discarded.
    pub min_on_s: f64,
    /// Gaps shorter than this are bridged.
    pub min_off_s: f64,
    /// Upper bound on chunk duration.
    pub max_chunk_s: f64,
    /// A cut never produces a piece shorter than this.
    pub min_cut_piece_s: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            onset: 0.5,
            offset: 0.363,
            min_on_s: 0.1,
            min_off_s: 0.1,
            max_chunk_s: 30.0,
            min_cut_piece_s: 2.0,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), SegmentationError> {
        let bad = |msg: String| Err(SegmentationError::InvalidConfig(msg));
        for (name, v) in [
            ("onset", self.onset),
            ("offset", self.offset),
            ("min_on_s", self.min_on_s),
            ("min_off_s", self.min_off_s),
            ("max_chunk_s", self.max_chunk_s),
            ("min_cut_piece_s", self.min_cut_piece_s),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.onset) || !(0.0..=1.0).contains(&self.offset) {
            return bad("onset and offset must lie in [0, 1]".into());
        }
        if self.offset > self.onset {
            return bad(format!("offset {} exceeds onset {}", self.offset, self.onset));
        }
        if self.min_on_s < 0.0 || self.min_off_s < 0.0 {
            return bad("min_on_s and min_off_s must be non-negative".into());
        }
        if self.min_cut_piece_s <= 0.0 || self.max_chunk_s <= self.min_cut_piece_s {
            return bad(format!(
                "need 0 < min_cut_piece_s < max_chunk_s, got {} and {}",
                self.min_cut_piece_s, self.max_chunk_s
            ));
        }
        if self.max_chunk_s < 2.0 * self.min_cut_piece_s {
            return Err(SegmentationError::InfeasibleCut {
                max_chunk_s: self.max_chunk_s,
                min_cut_piece_s: self.min_cut_piece_s,
            });
        }
        Ok(())
    }
}

/// Energy fallback used when no external probability file is available:
/// per-frame RMS normalized by the 95th-percentile frame RMS, clamped to
/// [0, 1]. The percentile makes the scale robust to recording level.
pub fn energy_vad(
    samples: &[f32],
    sample_rate: u32,
    frame_ms: u32,
) -> Result<FrameProbSeries, SegmentationError> {
    if samples.is_empty() {
        return Err(SegmentationError::EmptyAudio);
    }
    if sample_rate == 0 || frame_ms == 0 {
        return Err(SegmentationError::InvalidConfig(
            "sample_rate and frame_ms must be positive".into(),
        ));
    }
    let frame_len = ((sample_rate as u64 * frame_ms as u64) / 1000).max(1) as usize;
    let rms: Vec<f64> = samples
        .chunks(frame_len) // trailing partial frame included
        .map(|frame| {
            let sum: f64 = frame.iter().map(|&s| s as f64 * s as f64).sum();
            (sum / frame.len() as f64).sqrt()
        })
        .collect();
    let mut sorted = rms.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // nearest-rank 95th percentile
    let rank = ((0.95 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let p95 = sorted[rank - 1];
    let probs = if p95 <= 0.0 {
        vec![0.0; rms.len()]
    } else {
        rms.iter().map(|r| (r / p95).clamp(0.0, 1.0)).collect()
    };
    FrameProbSeries::new(frame_ms as f64 / 1000.0, probs)
}

/// Hysteresis binarization: open at `onset`, close below `offset`, then
/// bridge short gaps and drop short regions (in that order).
pub fn binarize(probs: &FrameProbSeries, cfg: &SegmentationConfig) -> Vec<VoiceSegment> {
    let f = probs.frame_duration_s();
    let mut raw: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &p) in probs.probs().iter().enumerate() {
        match open {
            None if p >= cfg.onset => open = Some(i),
            Some(s) if p < cfg.offset => {
                raw.push((s, i));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        raw.push((s, probs.len()));
    }

    let mut bridged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in raw {
        match bridged.last_mut() {
            Some((_, prev_end)) if (s - *prev_end) as f64 * f < cfg.min_off_s => *prev_end = e,
            _ => bridged.push((s, e)),
        }
    }
    bridged.retain(|&(s, e)| (e - s) as f64 * f >= cfg.min_on_s);

    bridged
        .into_iter()
        .map(|(s, e)| {
            VoiceSegment::new(s as f64 * f, e as f64 * f).expect("frame indices are ordered")
        })
        .collect()
}

/// Recursively split a segment longer than `max_chunk_s` at the frame with
/// the lowest speech probability, keeping every piece at least
/// `min_cut_piece_s` long. Earliest frame wins ties, so output is stable.
pub fn cut_segment(
    seg: VoiceSegment,
    probs: &FrameProbSeries,
    cfg: &SegmentationConfig,
) -> Result<Vec<VoiceSegment>, SegmentationError> {
    if cfg.max_chunk_s < 2.0 * cfg.min_cut_piece_s {
        return Err(SegmentationError::InfeasibleCut {
            max_chunk_s: cfg.max_chunk_s,
            min_cut_piece_s: cfg.min_cut_piece_s,
        });
    }
    if seg.end_s > probs.duration_s() + TIME_EPS {
        return Err(SegmentationError::SegmentOutOfRange {
            start_s: seg.start_s,
            end_s: seg.end_s,
            duration_s: probs.duration_s(),
        });
    }

    let mut out = Vec::new();
    let mut pending = VecDeque::from([seg]);
    while let Some(s) = pending.pop_front() {
        if s.duration_s() <= cfg.max_chunk_s {
            out.push(s);
            continue;
        }
        let cut_t = find_cut_time(s, probs, cfg);
        let left = VoiceSegment::new(s.start_s, cut_t).expect("cut lies inside the segment");
        let right = VoiceSegment::new(cut_t, s.end_s).expect("cut lies inside the segment");
        pending.push_front(right);
        pending.push_front(left); // left first keeps output sorted
    }
    Ok(out)
}

fn find_cut_time(seg: VoiceSegment, probs: &FrameProbSeries, cfg: &SegmentationConfig) -> f64 {
    let f = probs.frame_duration_s();
    let lo = seg.start_s + cfg.min_cut_piece_s;
    let hi = seg.end_s - cfg.min_cut_piece_s;
    // candidate cut points are frame start times inside [lo, hi]
    let i_lo = ((lo - TIME_EPS) / f).ceil().max(0.0) as usize;
    let i_hi = (((hi + TIME_EPS) / f).floor().max(0.0) as usize).min(probs.len().saturating_sub(1));
    let mut best: Option<(f64, usize)> = None;
    for i in i_lo..=i_hi.max(i_lo) {
        if i >= probs.len() {
            break;
        }
        let t = i as f64 * f;
        if t < lo - TIME_EPS || t > hi + TIME_EPS {
            continue;
        }
        let p = probs.probs()[i];
        if best.map_or(true, |(bp, _)| p < bp) {
            best = Some((p, i));
        }
    }
    match best {
        Some((_, i)) => {
            let t = i as f64 * f;
            // guard against degenerate pieces when min_cut_piece_s is tiny
            if t > seg.start_s && t < seg.end_s {
                t
            } else {
                0.5 * (seg.start_s + seg.end_s)
            }
        }
        // no frame boundary in the window (coarse frames): halve the segment
        None => 0.5 * (seg.start_s + seg.end_s),
    }
}

/// Greedy left-to-right packing: a segment joins the current chunk iff the
/// chunk would still span at most `max_chunk_s` from its first segment.
pub fn merge_segments(
    segments: &[VoiceSegment],
    cfg: &SegmentationConfig,
) -> Result<Vec<AudioChunk>, SegmentationError> {
    for i in 1..segments.len() {
        if segments[i].start_s < segments[i - 1].end_s {
            return Err(SegmentationError::UnsortedInput { index: i });
        }
    }
    let mut chunks: Vec<AudioChunk> = Vec::new();
    let mut current: Vec<VoiceSegment> = Vec::new();
    for &seg in segments {
        if let Some(first) = current.first() {
            if seg.end_s - first.start_s <= cfg.max_chunk_s {
                current.push(seg);
                continue;
            }
            chunks.push(AudioChunk::from_segments(chunks.len(), std::mem::take(&mut current))?);
        }
        current.push(seg);
    }
    if !current.is_empty() {
        chunks.push(AudioChunk::from_segments(chunks.len(), current)?);
    }
    Ok(chunks)
}

/// Full chunk planning: binarize, cut over-long segments, pack.
pub fn plan_chunks(
    probs: &FrameProbSeries,
    cfg: &SegmentationConfig,
) -> Result<Vec<AudioChunk>, SegmentationError> {
    cfg.validate()?;
    let mut pieces = Vec::new();
    for seg in binarize(probs, cfg) {
        pieces.extend(cut_segment(seg, probs, cfg)?);
    }
    merge_segments(&pieces, cfg)
}

const PROBS_KIND: &str = "probs file";
const SEGMENTS_KIND: &str = "segments file";
const CHUNKS_KIND: &str = "chunks file";

/// Probability file: `frame_duration_s=<float>` header, one prob per line.
pub fn parse_probs(text: &str) -> Result<FrameProbSeries, ParseError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ParseError::new(PROBS_KIND, 1, "missing frame_duration_s header"))?;
    let value = header
        .strip_prefix("frame_duration_s=")
        .ok_or_else(|| ParseError::new(PROBS_KIND, 1, "expected frame_duration_s=<float>"))?;
    let frame_duration_s: f64 = value
        .trim()
        .parse()
        .map_err(|_| ParseError::new(PROBS_KIND, 1, format!("bad float {value:?}")))?;
    if !(frame_duration_s.is_finite() && frame_duration_s > 0.0) {
        return Err(ParseError::new(PROBS_KIND, 1, "frame_duration_s must be positive"));
    }
    let mut probs = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let p: f64 = line
            .trim()
            .parse()
            .map_err(|_| ParseError::new(PROBS_KIND, line_no, format!("bad float {line:?}")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(ParseError::new(
                PROBS_KIND,
                line_no,
                format!("probability {p} outside [0, 1]"),
            ));
        }
        probs.push(p);
    }
    FrameProbSeries::new(frame_duration_s, probs)
        .map_err(|e| ParseError::new(PROBS_KIND, 1, e.to_string()))
}

pub fn render_probs(probs: &FrameProbSeries) -> String {
    let mut out = format!("frame_duration_s={}\n", probs.frame_duration_s());
    for p in probs.probs() {
        out.push_str(&format!("{p}\n"));
    }
    out
}

/// Segment file: `start<TAB>end` per line, three decimals.
pub fn render_segments(segments: &[VoiceSegment]) -> String {
    let mut out = String::new();
    for seg in segments {
        out.push_str(&format!("{:.3}\t{:.3}\n", seg.start_s, seg.end_s));
    }
    out
}

pub fn parse_segments(text: &str) -> Result<Vec<VoiceSegment>, ParseError> {
    let mut segments = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut fields = line.split('\t');
        let (Some(start), Some(end), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(ParseError::new(SEGMENTS_KIND, line_no, "expected start<TAB>end"));
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| ParseError::new(SEGMENTS_KIND, line_no, format!("bad float {s:?}")))
        };
        segments.push(
            VoiceSegment::new(parse(start)?, parse(end)?)
                .map_err(|e| ParseError::new(SEGMENTS_KIND, line_no, e.to_string()))?,
        );
    }
    Ok(segments)
}

/// Chunk-plan file, the handoff between `segment` and `transcribe`:
/// `index<TAB>start<TAB>end<TAB>s0:e0;s1:e1;...` per line, three decimals.
pub fn render_chunks(chunks: &[AudioChunk]) -> String {
    let mut out = String::new();
    for chunk in chunks {
        let segs: Vec<String> = chunk
            .segments
            .iter()
            .map(|s| format!("{:.3}:{:.3}", s.start_s, s.end_s))
            .collect();
        out.push_str(&format!(
            "{}\t{:.3}\t{:.3}\t{}\n",
            chunk.index,
            chunk.start_s,
            chunk.end_s,
            segs.join(";")
        ));
    }
    out
}

pub fn parse_chunks(text: &str) -> Result<Vec<AudioChunk>, ParseError> {
    let mut chunks: Vec<AudioChunk> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: String| ParseError::new(CHUNKS_KIND, line_no, msg);
        let fields: Vec<&str> = line.split('\t').collect();
        let [index, start, end, segs] = fields.as_slice() else {
            return Err(err("expected index<TAB>start<TAB>end<TAB>segments".into()));
        };
        let index: usize =
            index.parse().map_err(|_| err(format!("bad chunk index {index:?}")))?;
        if index != chunks.len() {
            return Err(err(format!("chunk indices must be dense, expected {}", chunks.len())));
        }
        let parse_f = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad float {s:?}")));
        let (start, end) = (parse_f(start)?, parse_f(end)?);
        let mut segments = Vec::new();
        for part in segs.split(';') {
            let Some((s, e)) = part.split_once(':') else {
                return Err(err(format!("bad segment {part:?}, expected start:end")));
            };
            segments.push(
                VoiceSegment::new(parse_f(s)?, parse_f(e)?).map_err(|e| err(e.to_string()))?,
            );
        }
        let chunk =
            AudioChunk::from_segments(index, segments).map_err(|e| err(e.to_string()))?;
        if chunk.start_s != start || chunk.end_s != end {
            return Err(err("chunk span does not match its segments".into()));
        }
        chunks.push(chunk);
    }
    Ok(chunks)
}
