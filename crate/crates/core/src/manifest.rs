//! Labelled corpus manifests: one `<label>,<path>` record per line.
//!
//! Labels are `natural` or `synthesized`. Relative paths resolve against the
//! manifest's directory. Blank lines and lines starting with `#` are ignored.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::calibration::{Label, LabeledSample};
use crate::features::{extract_file_features, FeatureError};
use crate::framing::FramingConfig;
use crate::wav::{parse_wav, WavError};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{path}: {source}")]
    Wav {
        path: String,
        #[source]
        source: WavError,
    },
    #[error("{path}: {source}")]
    Features {
        path: String,
        #[source]
        source: FeatureError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub label: Label,
    pub path: PathBuf,
}

pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Vec<ManifestEntry>, ManifestError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |message: String| ManifestError::Syntax { line: i + 1, message };
        let (label, path) = line
            .split_once(',')
            .ok_or_else(|| syntax(format!("expected <label>,<path>, got {line:?}")))?;
        let label: Label = label.trim().parse().map_err(syntax)?;
        let path = path.trim();
        if path.is_empty() {
            return Err(syntax("empty path".into()));
        }
        let path = Path::new(path);
        out.push(ManifestEntry {
            label,
            path: if path.is_absolute() {
                path.to_path_buf()
            } else {
                base_dir.join(path)
            },
        });
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Reads every listed WAV and extracts its file-level features.
pub fn load_samples(entries: &[ManifestEntry], config: &FramingConfig) -> Result<Vec<LabeledSample>, ManifestError> {
    entries
        .iter()
        .map(|e| {
            let path = e.path.display().to_string();
            let bytes = std::fs::read(&e.path).map_err(|source| ManifestError::Io {
                path: path.clone(),
                source,
            })?;
            let buffer = parse_wav(&bytes).map_err(|source| ManifestError::Wav {
                path: path.clone(),
                source,
            })?;
            let features = extract_file_features(&buffer, config).map_err(|source| ManifestError::Features {
                path: path.clone(),
                source,
            })?;
            Ok(LabeledSample {
                features,
                label: e.label,
                source_id: path,
            })
        })
        .collect()
}
