//! Batched transcription of planned chunks over a pluggable ASR backend.
//!
//! Backends receive whole batches so implementations can amortize work;
//! the driver keeps results in chunk order regardless of how batches are
//! scheduled. Two concrete backends ship here: a fixture lookup for tests
//! and offline runs, and an external-command bridge.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;

use rayon::prelude::*;
use thiserror::Error;

use crate::audio::{write_wav_pcm16, AudioError};
use crate::segmentation::AudioChunk;
use crate::transcript::{Transcript, TranscriptSegment};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("command exited with status {code}: {stderr}")]
    NonZeroExit { code: i32, stderr: String },
    #[error("backend produced {got} lines for {expected} chunks")]
    LineCountMismatch { expected: usize, got: usize },
    #[error("chunk {chunk_index} has no audio samples to hand to the command")]
    MissingAudio { chunk_index: usize },
    #[error("backend produced non-UTF-8 output")]
    InvalidUtf8,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

#[derive(Debug, Error)]
pub enum TranscribeError {
    #[error("batch size must be at least 1")]
    InvalidBatchSize,
    #[error("ASR backend failed on chunk {chunk_index}: {message}")]
    BackendFailure { chunk_index: usize, message: String },
    #[error("fixture manifest line {line}: {message}")]
    MalformedManifest { line: usize, message: String },
    #[error("command template has no {{list}} placeholder")]
    MissingPlaceholder,
    #[error("transcript references unknown chunk index {0}")]
    UnknownChunkIndex(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Audio slice backing one chunk.
#[derive(Debug, Clone, Copy)]
pub struct ChunkAudio<'a> {
    pub samples: &'a [f32],
    pub sample_rate: u32,
}

/// What a backend sees for one chunk of a batch.
#[derive(Debug, Clone, Copy)]
pub struct ChunkRef<'a> {
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub audio: Option<ChunkAudio<'a>>,
}

/// One chunk's transcription.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkTranscript {
    pub chunk_index: usize,
    pub text: String,
    pub language_tag: Option<String>,
}

pub trait AsrBackend: Sync {
    fn name(&self) -> &str;

    /// Transcribe a batch, one output line of text per chunk, same order.
    fn transcribe_batch(&self, batch: &[ChunkRef<'_>]) -> Result<Vec<String>, BackendError>;

    /// Whether independent batches may run concurrently.
    fn concurrent_batches(&self) -> bool {
        true
    }

    /// Non-fatal notes accumulated while transcribing.
    fn warnings(&self) -> Vec<String> {
        Vec::new()
    }
}

/// Run every chunk through the backend in batches of `batch_size`, keeping
/// chunk order in the output. The first failing batch reports the first
/// chunk index it contains.
pub fn transcribe_chunks(
    chunks: &[AudioChunk],
    audio: Option<(&[f32], u32)>,
    backend: &dyn AsrBackend,
    batch_size: usize,
) -> Result<Vec<ChunkTranscript>, TranscribeError> {
    if batch_size == 0 {
        return Err(TranscribeError::InvalidBatchSize);
    }
    let slice_for = |chunk: &AudioChunk| {
        audio.map(|(samples, rate)| {
            let lo = ((chunk.start_s() * rate as f64).round() as usize).min(samples.len());
            let hi = ((chunk.end_s() * rate as f64).round() as usize).clamp(lo, samples.len());
            ChunkAudio { samples: &samples[lo..hi], sample_rate: rate }
        })
    };
    let run_batch = |batch: &[AudioChunk]| -> Result<Vec<String>, TranscribeError> {
        let refs: Vec<ChunkRef<'_>> = batch
            .iter()
            .map(|c| ChunkRef {
                index: c.index(),
                start_s: c.start_s(),
                end_s: c.end_s(),
                audio: slice_for(c),
            })
            .collect();
        let first = batch[0].index();
        let texts = backend.transcribe_batch(&refs).map_err(|e| {
            TranscribeError::BackendFailure { chunk_index: first, message: e.to_string() }
        })?;
        if texts.len() != batch.len() {
            return Err(TranscribeError::BackendFailure {
                chunk_index: first,
                message: format!("backend returned {} texts for {} chunks", texts.len(), batch.len()),
            });
        }
        Ok(texts)
    };

    let batches: Vec<&[AudioChunk]> = chunks.chunks(batch_size).collect();
    let results: Vec<Result<Vec<String>, TranscribeError>> = if backend.concurrent_batches() {
        batches.par_iter().map(|b| run_batch(b)).collect()
    } else {
        batches.iter().map(|b| run_batch(b)).collect()
    };

    let mut out = Vec::with_capacity(chunks.len());
    for (batch, result) in batches.iter().zip(results) {
        let texts = result?; // first failing batch in chunk order wins
        for (chunk, text) in batch.iter().zip(texts) {
            out.push(ChunkTranscript { chunk_index: chunk.index(), text, language_tag: None });
        }
    }
    out.sort_by_key(|c| c.chunk_index);
    Ok(out)
}

/// Lookup backend mapping chunk keys to canned texts. Keys are either a
/// chunk index or a `start-end` time range (seconds, matched at millisecond
/// precision). Chunks without an entry transcribe to an empty string and
/// are recorded as warnings.
pub struct FixtureBackend {
    by_index: HashMap<usize, String>,
    by_range: HashMap<String, String>,
    warnings: Mutex<Vec<String>>,
}

fn range_key(start_s: f64, end_s: f64) -> String {
    format!("{start_s:.3}-{end_s:.3}")
}

impl FixtureBackend {
    /// Parse a `key<TAB>text` manifest; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, TranscribeError> {
        let mut by_index = HashMap::new();
        let mut by_range = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('\t') else {
                return Err(TranscribeError::MalformedManifest {
                    line: line_no,
                    message: "expected key<TAB>text".into(),
                });
            };
            if let Ok(index) = key.parse::<usize>() {
                if by_index.insert(index, value.to_string()).is_some() {
                    return Err(TranscribeError::MalformedManifest {
                        line: line_no,
                        message: format!("duplicate chunk index {index}"),
                    });
                }
                continue;
            }
            let range = key.split_once('-').and_then(|(a, b)| {
                match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                    (Ok(s), Ok(e)) => Some(range_key(s, e)),
                    _ => None,
                }
            });
            let Some(canonical) = range else {
                return Err(TranscribeError::MalformedManifest {
                    line: line_no,
                    message: format!("key {key:?} is neither an index nor start-end"),
                });
            };
            if by_range.insert(canonical, value.to_string()).is_some() {
                return Err(TranscribeError::MalformedManifest {
                    line: line_no,
                    message: format!("duplicate range key {key:?}"),
                });
            }
        }
        Ok(FixtureBackend { by_index, by_range, warnings: Mutex::new(Vec::new()) })
    }

    pub fn from_path(path: &Path) -> Result<Self, TranscribeError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

impl AsrBackend for FixtureBackend {
    fn name(&self) -> &str {
        "fixture"
    }

    fn transcribe_batch(&self, batch: &[ChunkRef<'_>]) -> Result<Vec<String>, BackendError> {
        Ok(batch
            .iter()
            .map(|c| {
                self.by_index
                    .get(&c.index)
                    .or_else(|| self.by_range.get(&range_key(c.start_s, c.end_s)))
                    .cloned()
                    .unwrap_or_else(|| {
                        self.warnings.lock().unwrap().push(format!(
                            "no fixture entry for chunk {} ({:.3}-{:.3})",
                            c.index, c.start_s, c.end_s
                        ));
                        String::new()
                    })
            })
            .collect())
    }

    fn warnings(&self) -> Vec<String> {
        self.warnings.lock().unwrap().clone()
    }
}

/// Run an external command per batch. Chunk audio is written as PCM16 WAV
/// files, their paths listed in a file substituted for the `{list}`
/// template token; the command must print one transcription line per chunk.
pub struct CommandBackend {
    template: Vec<String>,
}

impl CommandBackend {
    pub fn new(template: &str) -> Result<Self, TranscribeError> {
        let tokens: Vec<String> = template.split_whitespace().map(str::to_string).collect();
        if !tokens.iter().any(|t| t == "{list}") {
            return Err(TranscribeError::MissingPlaceholder);
        }
        Ok(CommandBackend { template: tokens })
    }
}

impl AsrBackend for CommandBackend {
    fn name(&self) -> &str {
        "command"
    }

    fn transcribe_batch(&self, batch: &[ChunkRef<'_>]) -> Result<Vec<String>, BackendError> {
        let dir = tempfile::tempdir()?;
        let mut list = String::new();
        for chunk in batch {
            let audio = chunk.audio.ok_or(BackendError::MissingAudio { chunk_index: chunk.index })?;
            let wav = dir.path().join(format!("chunk_{}.wav", chunk.index));
            write_wav_pcm16(&wav, audio.samples, audio.sample_rate)?;
            list.push_str(&wav.to_string_lossy());
            list.push('\n');
        }
        let list_path = dir.path().join("list.txt");
        std::fs::write(&list_path, list)?;

        let mut args = self.template.iter().map(|t| {
            if t == "{list}" { list_path.to_string_lossy().into_owned() } else { t.clone() }
        });
        let program = args.next().expect("validated template is non-empty");
        let output = Command::new(program).args(args).output()?;
        if !output.status.success() {
            return Err(BackendError::NonZeroExit {
                code: output.status.code().unwrap_or(-1),
                stderr: String::from_utf8_lossy(&output.stderr).trim_end().to_string(),
            });
        }
        let stdout = String::from_utf8(output.stdout).map_err(|_| BackendError::InvalidUtf8)?;
        let lines: Vec<String> = stdout.lines().map(str::to_string).collect();
        if lines.len() != batch.len() {
            return Err(BackendError::LineCountMismatch { expected: batch.len(), got: lines.len() });
        }
        Ok(lines)
    }
}

/// Build a transcript whose segments carry each chunk's span and raw text.
/// Word timings are filled in later by alignment.
pub fn assemble_transcript(
    chunk_transcripts: &[ChunkTranscript],
    chunks: &[AudioChunk],
) -> Result<Transcript, TranscribeError> {
    let by_index: HashMap<usize, &AudioChunk> = chunks.iter().map(|c| (c.index(), c)).collect();
    let mut segments = Vec::with_capacity(chunk_transcripts.len());
    for ct in chunk_transcripts {
        let chunk = by_index
            .get(&ct.chunk_index)
            .ok_or(TranscribeError::UnknownChunkIndex(ct.chunk_index))?;
        segments.push(TranscriptSegment {
            start_s: chunk.start_s(),
            end_s: chunk.end_s(),
            text: ct.text.clone(),
            words: Vec::new(),
        });
    }
    segments.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    Ok(Transcript {
        audio_id: String::new(),
        pipeline_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: String::new(),
        segments,
    })
}
