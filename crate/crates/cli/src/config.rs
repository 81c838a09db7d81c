//! Config file handling and the config hash stamped into transcripts.
//!
//! Precedence: built-in defaults, then the `key=value` config file, then
//! command-line flags.

use std::collections::BTreeSet;
use std::path::PathBuf;

use longform_core::error::ParseError;
use longform_core::{NormalizerConfig, SegmentationConfig};
use sha2::{Digest, Sha256};

const CONFIG_KIND: &str = "config file";

/// Optional overrides read from a config file.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    pub onset: Option<f64>,
    pub offset: Option<f64>,
    pub min_on_s: Option<f64>,
    pub min_off_s: Option<f64>,
    pub max_chunk_s: Option<f64>,
    pub min_cut_piece_s: Option<f64>,
    pub keep_interjections: Option<bool>,
    pub interjection_set: Option<BTreeSet<String>>,
    pub glm_path: Option<PathBuf>,
}

pub fn parse_config_file(text: &str) -> Result<FileConfig, ParseError> {
    let mut cfg = FileConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ParseError::new(CONFIG_KIND, line_no, format!("expected key=value, got {line:?}")));
        };
        let key = key.trim();
        let value = value.trim();
        let float = || {
            value.parse::<f64>().map_err(|_| {
                ParseError::new(CONFIG_KIND, line_no, format!("bad float for {key}: {value:?}"))
            })
        };
        match key {
            "onset" => cfg.onset = Some(float()?),
            "offset" => cfg.offset = Some(float()?),
            "min_on_s" => cfg.min_on_s = Some(float()?),
            "min_off_s" => cfg.min_off_s = Some(float()?),
            "max_chunk_s" => cfg.max_chunk_s = Some(float()?),
            "min_cut_piece_s" => cfg.min_cut_piece_s = Some(float()?),
            "keep_interjections" => {
                cfg.keep_interjections = Some(value.parse::<bool>().map_err(|_| {
                    ParseError::new(
                        CONFIG_KIND,
                        line_no,
                        format!("keep_interjections must be true or false, got {value:?}"),
                    )
                })?)
            }
            "interjection_set" => {
                cfg.interjection_set = Some(
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect(),
                )
            }
            "glm_path" => cfg.glm_path = Some(PathBuf::from(value)),
            other => {
                return Err(ParseError::new(
                    CONFIG_KIND,
                    line_no,
                    format!("unknown key {other:?}"),
                ))
            }
        }
    }
    Ok(cfg)
}

/// Flag-level overrides, applied last.
#[derive(Debug, Default, Clone)]
pub struct SegOverrides {
    pub onset: Option<f64>,
    pub offset: Option<f64>,
    pub min_on_s: Option<f64>,
    pub min_off_s: Option<f64>,
    pub max_chunk_s: Option<f64>,
    pub min_cut_piece_s: Option<f64>,
}

pub fn resolve_seg(file: &FileConfig, flags: &SegOverrides) -> SegmentationConfig {
    let mut cfg = SegmentationConfig::default();
    for (slot, file_v, flag_v) in [
        (&mut cfg.onset, file.onset, flags.onset),
        (&mut cfg.offset, file.offset, flags.offset),
        (&mut cfg.min_on_s, file.min_on_s, flags.min_on_s),
        (&mut cfg.min_off_s, file.min_off_s, flags.min_off_s),
        (&mut cfg.max_chunk_s, file.max_chunk_s, flags.max_chunk_s),
        (&mut cfg.min_cut_piece_s, file.min_cut_piece_s, flags.min_cut_piece_s),
    ] {
        if let Some(v) = flag_v.or(file_v) {
            *slot = v;
        }
    }
    cfg
}

#[derive(Debug, Default, Clone)]
pub struct NormOverrides {
    pub no_keep_interjections: bool,
    pub interjections: Option<BTreeSet<String>>,
    pub glm: Option<PathBuf>,
}

pub fn resolve_norm(file: &FileConfig, flags: &NormOverrides) -> NormalizerConfig {
    let mut cfg = NormalizerConfig::default();
    if let Some(v) = file.keep_interjections {
        cfg.keep_interjections = v;
    }
    if flags.no_keep_interjections {
        cfg.keep_interjections = false;
    }
    if let Some(set) = flags.interjections.clone().or_else(|| file.interjection_set.clone()) {
        cfg.interjection_set = set;
    }
    if let Some(path) = flags.glm.clone().or_else(|| file.glm_path.clone()) {
        cfg.glm_path = Some(path);
    }
    cfg
}

/// Short stable fingerprint of everything that shapes transcript content.
/// Batch size is deliberately excluded: output must not depend on it.
pub fn config_hash(seg: &SegmentationConfig, frame_ms: u32) -> String {
    let canonical = format!(
        "onset={} offset={} min_on_s={} min_off_s={} max_chunk_s={} min_cut_piece_s={} frame_ms={}",
        seg.onset, seg.offset, seg.min_on_s, seg.min_off_s, seg.max_chunk_s,
        seg.min_cut_piece_s, frame_ms
    );
    let digest = Sha256::digest(canonical.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in &digest[..8] {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
