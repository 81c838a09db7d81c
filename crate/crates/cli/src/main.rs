//! `longform`: command-line surface for the long-form transcription
//! toolkit. Each pipeline stage is its own subcommand with text file
//! handoff; `pipeline` runs them all in one go.
//!
//! Exit codes: 0 success, 2 input/config/parse errors, 3 ASR backend
//! failures, 4 alignment infeasibility.

mod config;

use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use longform_core::alignment::{align_chunk, AlignError};
use longform_core::audio::{load_wav, AudioError};
use longform_core::error::ParseError;
use longform_core::normalize::NormalizeError;
use longform_core::pipeline::{
    run_pipeline, DirEmissionSource, EmissionSource, PipelineError, PipelineInput,
};
use longform_core::scoring::{
    load_pairs_dir, load_pairs_file, render_before_after, render_diff, render_machine_report,
    render_report, score_corpus, PairsError, ScoringError, TableStyle,
};
use longform_core::segmentation::{
    binarize, energy_vad, parse_chunks, parse_probs, plan_chunks, render_chunks, render_segments,
    SegmentationError,
};
use longform_core::transcript::{parse_transcript, render_srt, render_transcript, render_vtt};
use longform_core::transcription::{
    assemble_transcript, transcribe_chunks, AsrBackend, CommandBackend, FixtureBackend,
    TranscribeError,
};
use longform_core::{FrameProbSeries, Normalizer, NormalizerConfig};

use config::{
    config_hash, parse_config_file, resolve_norm, resolve_seg, FileConfig, NormOverrides,
    SegOverrides,
};

#[derive(Parser)]
#[command(name = "longform", version, about = "Long-form speech transcription toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect voice activity and write a segments file
    Vad(VadArgs),
    /// Plan bounded transcription chunks (cut and merge) from voice activity
    Segment(SegmentArgs),
    /// Transcribe a chunk plan with an ASR backend
    Transcribe(TranscribeArgs),
    /// Attach word timings to a transcript from per-chunk emission files
    Align(AlignArgs),
    /// Normalize text for scoring
    Normalize(NormalizeArgs),
    /// Score hypothesis transcripts against references (WER)
    Score(ScoreArgs),
    /// Run VAD, chunking, transcription and alignment end to end
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct InputArgs {
    /// WAV audio input (PCM16 or float32)
    #[arg(long, value_name = "WAV", conflicts_with = "probs", required_unless_present = "probs")]
    audio: Option<PathBuf>,
    /// Frame speech-probability file
    #[arg(long, value_name = "FILE")]
    probs: Option<PathBuf>,
    /// Energy-VAD frame length over --audio, in milliseconds
    #[arg(long, value_name = "MS", default_value_t = 20)]
    frame_ms: u32,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// key=value config file; flags override it
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Probability at or above which a speech region opens
    #[arg(long, value_name = "P")]
    onset: Option<f64>,
    /// Probability below which an open region closes
    #[arg(long, value_name = "P")]
    offset: Option<f64>,
    /// Drop voice regions shorter than this many seconds
    #[arg(long, value_name = "S")]
    min_on: Option<f64>,
    /// Bridge silence gaps shorter than this many seconds
    #[arg(long, value_name = "S")]
    min_off: Option<f64>,
    /// Maximum chunk duration in seconds
    #[arg(long, value_name = "S")]
    max_chunk: Option<f64>,
    /// Minimum piece duration when cutting over-long segments, seconds
    #[arg(long, value_name = "S")]
    min_cut_piece: Option<f64>,
}

impl ConfigArgs {
    fn seg(&self) -> Result<longform_core::SegmentationConfig, CliError> {
        let file = match &self.config {
            Some(path) => parse_config_file(&read_text(path)?)?,
            None => FileConfig::default(),
        };
        let flags = SegOverrides {
            onset: self.onset,
            offset: self.offset,
            min_on_s: self.min_on,
            min_off_s: self.min_off,
            max_chunk_s: self.max_chunk,
            min_cut_piece_s: self.min_cut_piece,
        };
        let cfg = resolve_seg(&file, &flags);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone)]
struct NormFlags {
    /// Drop interjections instead of keeping them
    #[arg(long)]
    no_keep_interjections: bool,
    /// Comma-separated interjection set override
    #[arg(long, value_name = "WORDS")]
    interjections: Option<String>,
    /// GLM mapping rules file
    #[arg(long, value_name = "FILE")]
    glm: Option<PathBuf>,
}

fn norm_cfg(config: &Option<PathBuf>, flags: &NormFlags) -> Result<NormalizerConfig, CliError> {
    let file = match config {
        Some(path) => parse_config_file(&read_text(path)?)?,
        None => FileConfig::default(),
    };
    let overrides = NormOverrides {
        no_keep_interjections: flags.no_keep_interjections,
        interjections: flags.interjections.as_ref().map(|s| {
            s.split(',').map(str::trim).filter(|w| !w.is_empty()).map(str::to_string).collect()
        }),
        glm: flags.glm.clone(),
    };
    Ok(resolve_norm(&file, &overrides))
}

#[derive(Args)]
struct VadArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output segments file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SegmentArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output chunk-plan file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TranscribeArgs {
    /// Chunk-plan file produced by `segment`
    #[arg(long, value_name = "FILE")]
    chunks: PathBuf,
    /// Backend spec: `fixture:<manifest>` or `command:<template with {list}>`
    #[arg(long, value_name = "SPEC")]
    backend: String,
    /// WAV audio matching the chunk plan (required by command backends)
    #[arg(long, value_name = "WAV")]
    audio: Option<PathBuf>,
    #[arg(long, value_name = "N", default_value_t = 8)]
    batch_size: usize,
    /// Audio id stamped into the transcript (defaults to the input stem)
    #[arg(long, value_name = "ID")]
    audio_id: Option<String>,
    /// Output transcript file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AlignArgs {
    /// Transcript file whose segments need word timings
    #[arg(long, value_name = "FILE")]
    transcript: PathBuf,
    /// Directory of per-chunk emission files (`chunk_<i>.emis`)
    #[arg(long, value_name = "DIR")]
    emissions: PathBuf,
    /// Output transcript file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormalizeArgs {
    /// Input text file; standard input when omitted or `-`
    input: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(flatten)]
    norm: NormFlags,
    /// Output file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Pairs file: `id<TAB>ref_path<TAB>hyp_path` per line
    #[arg(
        long,
        value_name = "FILE",
        conflicts_with = "pairs_dir",
        required_unless_present = "pairs_dir"
    )]
    pairs: Option<PathBuf>,
    /// Directory of `<id>.ref.txt` / `<id>.hyp.txt` pairs
    #[arg(long, value_name = "DIR")]
    pairs_dir: Option<PathBuf>,
    /// Report raw and normalized WER side by side
    #[arg(long)]
    before_after: bool,
    /// Score without any normalization
    #[arg(long, conflicts_with = "before_after")]
    no_normalize: bool,
    /// Print aligned GT/PRED rows per file
    #[arg(long)]
    diff: bool,
    /// Render the table as markdown
    #[arg(long)]
    markdown: bool,
    /// Write the machine-readable count report to this file
    #[arg(long, value_name = "FILE")]
    machine_out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(flatten)]
    norm: NormFlags,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Backend spec: `fixture:<manifest>` or `command:<template with {list}>`
    #[arg(long, value_name = "SPEC")]
    backend: String,
    /// Directory of per-chunk emission files; omit to skip word alignment
    #[arg(long, value_name = "DIR")]
    emissions: Option<PathBuf>,
    #[arg(long, value_name = "N", default_value_t = 8)]
    batch_size: usize,
    /// Audio id stamped into the transcript (defaults to the input stem)
    #[arg(long, value_name = "ID")]
    audio_id: Option<String>,
    /// Output transcript file (stdout when omitted)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also write SRT subtitles here
    #[arg(long, value_name = "FILE")]
    srt: Option<PathBuf>,
    /// Also write WebVTT subtitles here
    #[arg(long, value_name = "FILE")]
    vtt: Option<PathBuf>,
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError { code: 2, message: format!("cannot access {}: {source}", path.display()) }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<SegmentationError> for CliError {
    fn from(e: SegmentationError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<AudioError> for CliError {
    fn from(e: AudioError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<NormalizeError> for CliError {
    fn from(e: NormalizeError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<PairsError> for CliError {
    fn from(e: PairsError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<TranscribeError> for CliError {
    fn from(e: TranscribeError) -> Self {
        let code = match &e {
            TranscribeError::BackendFailure { .. } => 3,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<AlignError> for CliError {
    fn from(e: AlignError) -> Self {
        let code = match &e {
            AlignError::InfeasibleLength { .. } | AlignError::EmissionsTooShort { .. } => 4,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::Transcribe(TranscribeError::BackendFailure { .. }) => 3,
            PipelineError::Align {
                source: AlignError::InfeasibleLength { .. } | AlignError::EmissionsTooShort { .. },
                ..
            } => 4,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_output(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_probs(input: &InputArgs) -> Result<FrameProbSeries, CliError> {
    if let Some(path) = &input.probs {
        Ok(parse_probs(&read_text(path)?)?)
    } else {
        let audio = load_wav(input.audio.as_ref().expect("clap enforces audio|probs"))?;
        Ok(energy_vad(&audio.samples, audio.sample_rate, input.frame_ms)?)
    }
}

fn build_backend(spec: &str) -> Result<Box<dyn AsrBackend>, CliError> {
    if let Some(path) = spec.strip_prefix("fixture:") {
        Ok(Box::new(FixtureBackend::parse(&read_text(Path::new(path))?)?))
    } else if let Some(template) = spec.strip_prefix("command:") {
        Ok(Box::new(CommandBackend::new(template)?))
    } else {
        Err(CliError::input(format!(
            "backend spec must be fixture:<path> or command:<template>, got {spec:?}"
        )))
    }
}

fn stem_of(path: &Path) -> Option<String> {
    path.file_stem().map(|s| s.to_string_lossy().into_owned())
}

fn audio_id_for(explicit: &Option<String>, candidates: &[Option<&PathBuf>]) -> String {
    explicit
        .clone()
        .or_else(|| candidates.iter().flatten().find_map(|p| stem_of(p)))
        .unwrap_or_else(|| "unknown".to_string())
}

fn print_warnings(backend: &dyn AsrBackend) {
    for warning in backend.warnings() {
        eprintln!("warning: {warning}");
    }
}

fn cmd_vad(args: VadArgs) -> Result<(), CliError> {
    let cfg = args.config.seg()?;
    let probs = load_probs(&args.input)?;
    let segments = binarize(&probs, &cfg);
    write_output(args.out.as_deref(), &render_segments(&segments))
}

fn cmd_segment(args: SegmentArgs) -> Result<(), CliError> {
    let cfg = args.config.seg()?;
    let probs = load_probs(&args.input)?;
    let chunks = plan_chunks(&probs, &cfg)?;
    write_output(args.out.as_deref(), &render_chunks(&chunks))
}

fn cmd_transcribe(args: TranscribeArgs) -> Result<(), CliError> {
    let chunks = parse_chunks(&read_text(&args.chunks)?)?;
    let backend = build_backend(&args.backend)?;
    let audio = match &args.audio {
        Some(path) => Some(load_wav(path)?),
        None => None,
    };
    let texts = transcribe_chunks(
        &chunks,
        audio.as_ref().map(|a| (a.samples.as_slice(), a.sample_rate)),
        backend.as_ref(),
        args.batch_size,
    )?;
    print_warnings(backend.as_ref());
    let mut transcript = assemble_transcript(&texts, &chunks)?;
    transcript.audio_id =
        audio_id_for(&args.audio_id, &[args.audio.as_ref(), Some(&args.chunks)]);
    transcript.quantize();
    write_output(args.out.as_deref(), &render_transcript(&transcript))
}

fn cmd_align(args: AlignArgs) -> Result<(), CliError> {
    let mut transcript = parse_transcript(&read_text(&args.transcript)?)?;
    let source = DirEmissionSource::new(args.emissions.clone());
    for (i, seg) in transcript.segments.iter_mut().enumerate() {
        let emissions = source.emissions_for(i)?;
        let need_s = seg.end_s - seg.start_s;
        if emissions.duration_s() + 1e-9 < need_s {
            return Err(AlignError::EmissionsTooShort {
                have_s: emissions.duration_s(),
                need_s,
            }
            .into());
        }
        seg.words = align_chunk(&seg.text, seg.start_s, &emissions)?;
    }
    transcript.quantize();
    write_output(args.out.as_deref(), &render_transcript(&transcript))
}

fn cmd_normalize(args: NormalizeArgs) -> Result<(), CliError> {
    let cfg = norm_cfg(&args.config, &args.norm)?;
    let normalizer = Normalizer::new(cfg)?;
    let text = match &args.input {
        Some(path) if path != Path::new("-") => read_text(path)?,
        _ => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| CliError::input(format!("cannot read standard input: {e}")))?;
            buf
        }
    };
    let mut out = String::new();
    for line in text.lines() {
        out.push_str(&normalizer.normalize(line));
        out.push('\n');
    }
    write_output(args.out.as_deref(), &out)
}

fn cmd_score(args: ScoreArgs) -> Result<(), CliError> {
    let pairs = match (&args.pairs, &args.pairs_dir) {
        (Some(file), None) => load_pairs_file(file)?,
        (None, Some(dir)) => load_pairs_dir(dir)?,
        _ => unreachable!("clap enforces exactly one pairs source"),
    };
    let cfg = norm_cfg(&args.config, &args.norm)?;
    let style = if args.markdown { TableStyle::Markdown } else { TableStyle::Plain };

    let (table, machine, diff_report) = if args.before_after {
        let before = score_corpus(&pairs, &cfg, false, false)?;
        let after = score_corpus(&pairs, &cfg, true, true)?;
        let table = render_before_after(&before, &after, style);
        let machine = format!(
            "{}\n{}",
            render_machine_report(&before, Some("before")),
            render_machine_report(&after, Some("after"))
        );
        (table, machine, after)
    } else {
        let normalize = !args.no_normalize;
        let report = score_corpus(&pairs, &cfg, normalize, normalize)?;
        let table = render_report(&report, style);
        let machine = render_machine_report(&report, None);
        (table, machine, report)
    };

    print!("{table}");
    if args.diff {
        for file in &diff_report.per_file {
            print!("\n{}:\n{}", file.id, render_diff(&file.ref_tokens, &file.hyp_tokens, &file.ops));
        }
    }
    if let Some(path) = &args.machine_out {
        std::fs::write(path, machine).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn cmd_pipeline(args: PipelineArgs) -> Result<(), CliError> {
    let cfg = args.config.seg()?;
    let probs = load_probs(&args.input)?;
    let audio = match &args.input.audio {
        Some(path) => Some(load_wav(path)?),
        None => None,
    };
    let backend = build_backend(&args.backend)?;
    let source = args.emissions.clone().map(DirEmissionSource::new);
    let audio_id = audio_id_for(
        &args.audio_id,
        &[args.input.audio.as_ref(), args.input.probs.as_ref()],
    );
    let input = PipelineInput { probs, audio: audio.as_ref(), audio_id };
    let mut transcript = run_pipeline(
        input,
        &cfg,
        backend.as_ref(),
        args.batch_size,
        source.as_ref().map(|s| s as &dyn EmissionSource),
    )?;
    print_warnings(backend.as_ref());
    transcript.config_hash = config_hash(&cfg, args.input.frame_ms);
    transcript.quantize();
    write_output(args.out.as_deref(), &render_transcript(&transcript))?;
    if let Some(path) = &args.srt {
        std::fs::write(path, render_srt(&transcript)).map_err(|e| CliError::io(path, e))?;
    }
    if let Some(path) = &args.vtt {
        std::fs::write(path, render_vtt(&transcript)).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Vad(args) => cmd_vad(args),
        Command::Segment(args) => cmd_segment(args),
        Command::Transcribe(args) => cmd_transcribe(args),
        Command::Align(args) => cmd_align(args),
        Command::Normalize(args) => cmd_normalize(args),
        Command::Score(args) => cmd_score(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
