//! Persisted classifier model: normalisation stats plus operating point.
//!
//! The on-disk form is a flat TOML document. Keys are written in this
//! fixed order:
//!
//! ```toml
//! format_version = 1
//! energy_min = 0.0
//! energy_max = 1.0
//! amplitude_min = 0.0
//! amplitude_max = 1.0
//! zcr_min = 0.0
//! zcr_max = 1.0
//! a = 0.01
//! b = 0.98
//! c = 0.01
//! v_threshold = 0.01
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{classify, ClassifierError, ClassifierParams, Decision, NormalizationStats, Range};
use crate::features::RawFeatures;

pub const MODEL_FORMAT_VERSION: u32 = 1;

const SHIPPED_DEFAULT: &str = include_str!("../models/default.toml");

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read model {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model is not valid TOML: {0}")]
    Syntax(String),
    #[error("unsupported model format_version {found} (expected {MODEL_FORMAT_VERSION})")]
    Version { found: u32 },
    #[error(transparent)]
    Invalid(#[from] ClassifierError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub stats: NormalizationStats,
    pub params: ClassifierParams,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    energy_min: f64,
    energy_max: f64,
    amplitude_min: f64,
    amplitude_max: f64,
    zcr_min: f64,
    zcr_max: f64,
    a: f64,
    b: f64,
    c: f64,
    v_threshold: f64,
}

impl Model {
    pub fn new(stats: NormalizationStats, params: ClassifierParams) -> Result<Self, ModelError> {
        stats.validate()?;
        params.validate()?;
        Ok(Self { stats, params })
    }

    /// The model bundled with the library: published weights and threshold,
    /// with stats fitted on the seed-42 fixture corpus at 16 kHz.
    pub fn shipped_default() -> Self {
        Self::from_toml(SHIPPED_DEFAULT).expect("bundled default model is valid")
    }

    pub fn classify(&self, raw: &RawFeatures) -> Decision {
        classify(raw, &self.stats, &self.params)
    }

    pub fn to_toml(&self) -> String {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            energy_min: self.stats.energy.min,
            energy_max: self.stats.energy.max,
            amplitude_min: self.stats.amplitude.min,
            amplitude_max: self.stats.amplitude.max,
            zcr_min: self.stats.zero_crossings.min,
            zcr_max: self.stats.zero_crossings.max,
            a: self.params.a,
            b: self.params.b,
            c: self.params.c,
            v_threshold: self.params.v_threshold,
        };
        toml::to_string(&file).expect("flat struct of numbers always serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let f: ModelFile = toml::from_str(text).map_err(|e| ModelError::Syntax(e.to_string()))?;
        if f.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Version {
                found: f.format_version,
            });
        }
        let stats = NormalizationStats::new(
            Range {
                min: f.energy_min,
                max: f.energy_max,
            },
            Range {
                min: f.amplitude_min,
                max: f.amplitude_max,
            },
            Range {
                min: f.zcr_min,
                max: f.zcr_max,
            },
        )?;
        let params = ClassifierParams::new(f.a, f.b, f.c, f.v_threshold)?;
        Ok(Self { stats, params })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_toml()).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
