//! End-to-end driver: plan chunks from voice activity, transcribe them in
//! batches, then align each chunk's text against its emission matrix to
//! attach word timings.

use std::collections::HashMap;
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::alignment::{align_chunk, AlignError, EmissionMatrix};
use crate::audio::AudioBuffer;
use crate::error::ParseError;
use crate::segmentation::{plan_chunks, FrameProbSeries, SegmentationConfig, SegmentationError};
use crate::transcription::{assemble_transcript, transcribe_chunks, AsrBackend, TranscribeError};
use crate::transcript::Transcript;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
    #[error(transparent)]
    Transcribe(#[from] TranscribeError),
    #[error("alignment failed on chunk {chunk_index}: {source}")]
    Align {
        chunk_index: usize,
        #[source]
        source: AlignError,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Supplies the emission matrix for a chunk index.
pub trait EmissionSource: Sync {
    fn emissions_for(&self, chunk_index: usize) -> Result<EmissionMatrix, PipelineError>;
}

/// Reads `chunk_<index>.emis` files from a directory.
pub struct DirEmissionSource {
    dir: PathBuf,
}

impl DirEmissionSource {
    pub fn new(dir: PathBuf) -> Self {
        DirEmissionSource { dir }
    }
}

impl EmissionSource for DirEmissionSource {
    fn emissions_for(&self, chunk_index: usize) -> Result<EmissionMatrix, PipelineError> {
        let path = self.dir.join(format!("chunk_{chunk_index}.emis"));
        let text = std::fs::read_to_string(&path)
            .map_err(|source| PipelineError::Io { path: path.clone(), source })?;
        Ok(crate::alignment::parse_emissions(&text)?)
    }
}

/// In-memory emission source, mainly for tests and library callers.
impl EmissionSource for HashMap<usize, EmissionMatrix> {
    fn emissions_for(&self, chunk_index: usize) -> Result<EmissionMatrix, PipelineError> {
        self.get(&chunk_index).cloned().ok_or_else(|| {
            PipelineError::Input(format!("no emissions for chunk {chunk_index}"))
        })
    }
}

pub struct PipelineInput<'a> {
    pub probs: FrameProbSeries,
    pub audio: Option<&'a AudioBuffer>,
    pub audio_id: String,
}

/// Run segmentation, transcription and (when an emission source is given)
/// per-word alignment. Word times come out in absolute audio time.
pub fn run_pipeline(
    input: PipelineInput<'_>,
    cfg: &SegmentationConfig,
    backend: &dyn AsrBackend,
    batch_size: usize,
    emissions: Option<&dyn EmissionSource>,
) -> Result<Transcript, PipelineError> {
    let chunks = plan_chunks(&input.probs, cfg)?;
    let audio = input.audio.map(|a| (a.samples.as_slice(), a.sample_rate));
    let texts = transcribe_chunks(&chunks, audio, backend, batch_size)?;
    let mut transcript = assemble_transcript(&texts, &chunks)?;

    if let Some(source) = emissions {
        // texts and chunks are both in chunk-index order, which is also
        // time order, so they line up with the assembled segments
        let aligned: Vec<Result<Vec<crate::alignment::AlignedWord>, PipelineError>> = texts
            .par_iter()
            .zip(&chunks)
            .map(|(ct, chunk)| {
                let emis = source.emissions_for(ct.chunk_index)?;
                let need_s = chunk.end_s() - chunk.start_s();
                let have_s = emis.duration_s();
                if have_s + 1e-9 < need_s {
                    return Err(PipelineError::Align {
                        chunk_index: ct.chunk_index,
                        source: AlignError::EmissionsTooShort { have_s, need_s },
                    });
                }
                align_chunk(&ct.text, chunk.start_s(), &emis).map_err(|source| {
                    PipelineError::Align { chunk_index: ct.chunk_index, source }
                })
            })
            .collect();
        for (seg, words) in transcript.segments.iter_mut().zip(aligned) {
            seg.words = words?;
        }
    }

    transcript.audio_id = input.audio_id;
    Ok(transcript)
}
