//! Short-term energy, average amplitude and zero-crossing count.
//!
//! Each indicator is computed per windowed frame; the file-level value is
//! the sum over frames, accumulated in frame order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::framing::{frames_of, FramingConfig, FramingError, WindowedFrame};
use crate::wav::AudioBuffer;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("zero-crossing count needs at least 2 samples, frame has {0}")]
    FrameTooShort(usize),
    #[error(transparent)]
    Framing(#[from] FramingError),
}

/// Indicators for one windowed frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameFeatures {
    pub energy: f64,
    pub amplitude: f64,
    pub zero_crossings: f64,
}

impl FrameFeatures {
    pub fn of(frame: &WindowedFrame) -> Result<Self, FeatureError> {
        Ok(Self {
            energy: short_term_energy(&frame.samples),
            amplitude: short_term_amplitude(&frame.samples),
            zero_crossings: short_term_zcr(&frame.samples)?,
        })
    }
}

/// File-level indicators: per-frame values summed over all frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawFeatures {
    pub energy: f64,
    pub amplitude: f64,
    pub zero_crossings: f64,
    pub frame_count: usize,
}

impl RawFeatures {
    pub const ZERO: RawFeatures = RawFeatures {
        energy: 0.0,
        amplitude: 0.0,
        zero_crossings: 0.0,
        frame_count: 0,
    };

    pub fn get(&self, indicator: Indicator) -> f64 {
        match indicator {
            Indicator::Energy => self.energy,
            Indicator::Amplitude => self.amplitude,
            Indicator::ZeroCrossing => self.zero_crossings,
        }
    }

    fn accumulate(&mut self, f: &FrameFeatures) {
        self.energy += f.energy;
        self.amplitude += f.amplitude;
        self.zero_crossings += f.zero_crossings;
        self.frame_count += 1;
    }
}

/// One of the three short-term indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Indicator {
    Energy,
    Amplitude,
    ZeroCrossing,
}

impl Indicator {
    pub const ALL: [Indicator; 3] = [Indicator::Energy, Indicator::Amplitude, Indicator::ZeroCrossing];

    pub fn name(self) -> &'static str {
        match self {
            Indicator::Energy => "short-term energy",
            Indicator::Amplitude => "short-term average amplitude",
            Indicator::ZeroCrossing => "short-term zero-crossing rate",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Indicator::Energy => "E",
            Indicator::Amplitude => "M",
            Indicator::ZeroCrossing => "Z",
        }
    }
}

impl std::str::FromStr for Indicator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "e" | "energy" => Ok(Indicator::Energy),
            "m" | "amplitude" => Ok(Indicator::Amplitude),
            "z" | "zcr" | "zero-crossing" => Ok(Indicator::ZeroCrossing),
            other => Err(format!("unknown indicator {other:?} (expected E, M or Z)")),
        }
    }
}

/// Sum of squared windowed samples.
pub fn short_term_energy(windowed: &[f64]) -> f64 {
    windowed.iter().map(|s| s * s).sum()
}

/// Sum of absolute windowed samples.
pub fn short_term_amplitude(windowed: &[f64]) -> f64 {
    windowed.iter().map(|s| s.abs()).sum()
}

fn sgn(v: f64) -> i8 {
    // zero counts as positive so silence has no crossings
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// Number of sign changes between adjacent samples, with `sgn(0) = +1`.
pub fn short_term_zcr(windowed: &[f64]) -> Result<f64, FeatureError> {
    if windowed.len() < 2 {
        return Err(FeatureError::FrameTooShort(windowed.len()));
    }
    let changes = windowed.windows(2).filter(|p| sgn(p[0]) != sgn(p[1])).count();
    Ok(changes as f64)
}

/// Per-frame indicator track for a buffer.
pub fn frame_features(buffer: &AudioBuffer, config: &FramingConfig) -> Result<Vec<FrameFeatures>, FeatureError> {
    let g = config.geometry(buffer.sample_rate())?;
    let coefficients = config.frame_coefficients(buffer.sample_rate())?;
    let mut scratch = Vec::with_capacity(g.frame_len);
    frames_of(buffer.samples(), g.frame_len, g.hop_len)
        .map(|frame| {
            scratch.clear();
            scratch.extend(frame.samples.iter().zip(&coefficients).map(|(&x, &w)| w * f64::from(x)));
            Ok(FrameFeatures {
                energy: short_term_energy(&scratch),
                amplitude: short_term_amplitude(&scratch),
                zero_crossings: short_term_zcr(&scratch)?,
            })
        })
        .collect()
}

/// Frames, windows and sums the three indicators over the whole buffer.
pub fn extract_file_features(buffer: &AudioBuffer, config: &FramingConfig) -> Result<RawFeatures, FeatureError> {
    let mut total = RawFeatures::ZERO;
    for f in frame_features(buffer, config)? {
        total.accumulate(&f);
    }
    Ok(total)
}
