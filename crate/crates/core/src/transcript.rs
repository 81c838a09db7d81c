//! Transcript container plus its serialization formats: a line-oriented
//! machine format that round-trips exactly, and SRT / WebVTT for players.
//!
//! The machine format quantizes times to milliseconds and scores to four
//! decimals at render time; [`Transcript::quantize`] applies the same
//! rounding to the in-memory values so render → parse reproduces the
//! struct bit for bit.

use crate::alignment::AlignedWord;
use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
    pub words: Vec<AlignedWord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub audio_id: String,
    pub pipeline_version: String,
    pub config_hash: String,
    pub segments: Vec<TranscriptSegment>,
}

impl Transcript {
    /// Round times to milliseconds and scores to 1e-4, matching what the
    /// machine format prints.
    pub fn quantize(&mut self) {
        let q3 = |x: f64| (x * 1000.0).round() / 1000.0;
        let q4 = |x: f64| (x * 10000.0).round() / 10000.0;
        for seg in &mut self.segments {
            seg.start_s = q3(seg.start_s);
            seg.end_s = q3(seg.end_s);
            for w in &mut seg.words {
                w.start_s = q3(w.start_s);
                w.end_s = q3(w.end_s);
                w.score = q4(w.score);
            }
        }
    }
}

fn sanitize(text: &str) -> String {
    text.replace(['\n', '\r', '\t'], " ")
}

pub fn render_transcript(transcript: &Transcript) -> String {
    let mut out = String::from("transcript_version=1\n");
    out.push_str(&format!("audio_id={}\n", sanitize(&transcript.audio_id)));
    out.push_str(&format!("pipeline_version={}\n", sanitize(&transcript.pipeline_version)));
    out.push_str(&format!("config_hash={}\n", sanitize(&transcript.config_hash)));
    for seg in &transcript.segments {
        out.push_str(&format!(
            "segment\t{:.3}\t{:.3}\t{}\n",
            seg.start_s,
            seg.end_s,
            sanitize(&seg.text)
        ));
        for w in &seg.words {
            out.push_str(&format!(
                "word\t{:.3}\t{:.3}\t{:.4}\t{}\t{}\n",
                w.start_s,
                w.end_s,
                w.score,
                if w.interpolated { 1 } else { 0 },
                sanitize(&w.word)
            ));
        }
    }
    out
}

const TRANSCRIPT_KIND: &str = "transcript file";

fn parse_f64(kind: &'static str, line: usize, s: &str) -> Result<f64, ParseError> {
    s.parse::<f64>().map_err(|_| ParseError::new(kind, line, format!("bad float {s:?}")))
}

pub fn parse_transcript(text: &str) -> Result<Transcript, ParseError> {
    let mut lines = text.lines().enumerate();
    let mut header = |key: &str| -> Result<String, ParseError> {
        let (i, line) = lines
            .next()
            .ok_or_else(|| ParseError::new(TRANSCRIPT_KIND, 0, format!("missing {key}= line")))?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| {
                ParseError::new(TRANSCRIPT_KIND, i + 1, format!("expected {key}=, got {line:?}"))
            })
    };
    let version = header("transcript_version")?;
    if version != "1" {
        return Err(ParseError::new(
            TRANSCRIPT_KIND,
            1,
            format!("unsupported transcript_version {version:?}"),
        ));
    }
    let audio_id = header("audio_id")?;
    let pipeline_version = header("pipeline_version")?;
    let config_hash = header("config_hash")?;

    let mut segments: Vec<TranscriptSegment> = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if let Some(rest) = line.strip_prefix("segment\t") {
            let fields: Vec<&str> = rest.splitn(3, '\t').collect();
            if fields.len() != 3 {
                return Err(ParseError::new(TRANSCRIPT_KIND, line_no, "segment needs 4 fields"));
            }
            segments.push(TranscriptSegment {
                start_s: parse_f64(TRANSCRIPT_KIND, line_no, fields[0])?,
                end_s: parse_f64(TRANSCRIPT_KIND, line_no, fields[1])?,
                text: fields[2].to_string(),
                words: Vec::new(),
            });
        } else if let Some(rest) = line.strip_prefix("word\t") {
            let fields: Vec<&str> = rest.splitn(5, '\t').collect();
            if fields.len() != 5 {
                return Err(ParseError::new(TRANSCRIPT_KIND, line_no, "word needs 6 fields"));
            }
            let seg = segments.last_mut().ok_or_else(|| {
                ParseError::new(TRANSCRIPT_KIND, line_no, "word line before any segment")
            })?;
            let interpolated = match fields[3] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(ParseError::new(
                        TRANSCRIPT_KIND,
                        line_no,
                        format!("interpolated flag must be 0 or 1, got {other:?}"),
                    ))
                }
            };
            seg.words.push(AlignedWord {
                start_s: parse_f64(TRANSCRIPT_KIND, line_no, fields[0])?,
                end_s: parse_f64(TRANSCRIPT_KIND, line_no, fields[1])?,
                score: parse_f64(TRANSCRIPT_KIND, line_no, fields[2])?,
                interpolated,
                word: fields[4].to_string(),
            });
        } else if !line.trim().is_empty() {
            return Err(ParseError::new(
                TRANSCRIPT_KIND,
                line_no,
                format!("unknown line {line:?}"),
            ));
        }
    }
    Ok(Transcript { audio_id, pipeline_version, config_hash, segments })
}

fn clock(seconds: f64, ms_sep: char) -> String {
    let total_ms = (seconds * 1000.0).round().max(0.0) as u64;
    let ms = total_ms % 1000;
    let s = (total_ms / 1000) % 60;
    let m = (total_ms / 60_000) % 60;
    let h = total_ms / 3_600_000;
    format!("{h:02}:{m:02}:{s:02}{ms_sep}{ms:03}")
}

/// One numbered SRT cue per segment.
pub fn render_srt(transcript: &Transcript) -> String {
    let mut out = String::new();
    for (i, seg) in transcript.segments.iter().enumerate() {
        out.push_str(&format!(
            "{}\n{} --> {}\n{}\n\n",
            i + 1,
            clock(seg.start_s, ','),
            clock(seg.end_s, ','),
            sanitize(&seg.text)
        ));
    }
    out
}

pub fn render_vtt(transcript: &Transcript) -> String {
    let mut out = String::from("WEBVTT\n\n");
    for seg in &transcript.segments {
        out.push_str(&format!(
            "{} --> {}\n{}\n\n",
            clock(seg.start_s, '.'),
            clock(seg.end_s, '.'),
            sanitize(&seg.text)
        ));
    }
    out
}
