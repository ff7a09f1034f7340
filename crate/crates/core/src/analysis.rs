//! End-to-end pipeline: parse → frame → window → features → normalize →
//! score → decide. Shared by the CLI and the HTTP service so both produce
//! identical scores for identical bytes.

use serde::Serialize;
use thiserror::Error;

use crate::classifier::Decision;
use crate::features::{extract_file_features, FeatureError, RawFeatures};
use crate::framing::FramingConfig;
use crate::model::Model;
use crate::wav::{parse_wav, AudioBuffer, WavError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    Features(#[from] FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Analysis {
    pub duration_secs: f64,
    pub raw: RawFeatures,
    pub decision: Decision,
}

pub fn analyze_buffer(buffer: &AudioBuffer, config: &FramingConfig, model: &Model) -> Result<Analysis, AnalysisError> {
    let raw = extract_file_features(buffer, config)?;
    Ok(Analysis {
        duration_secs: buffer.duration_secs(),
        raw,
        decision: model.classify(&raw),
    })
}

pub fn analyze_wav(bytes: &[u8], config: &FramingConfig, model: &Model) -> Result<Analysis, AnalysisError> {
    analyze_buffer(&parse_wav(bytes)?, config, model)
}
