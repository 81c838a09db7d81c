//! Long-form speech transcription toolkit: VAD-driven chunk planning,
//! batched transcription over pluggable ASR backends, CTC forced alignment
//! for word-level timestamps, text normalization and WER scoring.
//!
//! The crate is organized by pipeline stage. Everything operates on plain
//! in-memory types plus small line-oriented text formats, so each stage can
//! run standalone or composed via [`pipeline::run_pipeline`].

pub mod alignment;
pub mod audio;
pub mod error;
pub mod normalize;
pub mod pipeline;
pub mod scoring;
pub mod segmentation;
pub mod transcript;
pub mod transcription;

pub use alignment::{AlignError, AlignedWord, EmissionMatrix, LabelVocab};
pub use audio::AudioBuffer;
pub use error::ParseError;
pub use normalize::{GlmRuleSet, NormalizeError, Normalizer, NormalizerConfig};
pub use pipeline::{EmissionSource, PipelineError};
pub use scoring::{EditCounts, EditOp, WerReport, WerValue};
pub use segmentation::{
    AudioChunk, FrameProbSeries, SegmentationConfig, SegmentationError, VoiceSegment,
};
pub use transcript::{Transcript, TranscriptSegment};
pub use transcription::{AsrBackend, BackendError, ChunkTranscript, TranscribeError};

/// Slop used when comparing derived time values (frame index × duration)
/// against user-supplied boundaries.
pub(crate) const TIME_EPS: f64 = 1e-9;
