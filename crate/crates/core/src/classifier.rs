//! Min-max normalisation and the weighted threshold rule
//! `V = a·E + b·M + c·Z`, with `V > V'` classified as a bot.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Indicator, RawFeatures};

/// Tolerance on `a + b + c = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("cannot fit normalisation on an empty dataset")]
    EmptyDataset,
    #[error("invalid classifier parameters: {0}")]
    InvalidParams(String),
    #[error("invalid normalisation stats: {0}")]
    InvalidStats(String),
}

/// Observed range of one raw indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn scale(&self, x: f64) -> f64 {
        if self.max == self.min {
            return 0.5;
        }
        ((x - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }
}

/// Per-indicator min/max fitted on a calibration corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub energy: Range,
    pub amplitude: Range,
    pub zero_crossings: Range,
}

impl NormalizationStats {
    pub fn new(energy: Range, amplitude: Range, zero_crossings: Range) -> Result<Self, ClassifierError> {
        let stats = Self {
            energy,
            amplitude,
            zero_crossings,
        };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        for ind in Indicator::ALL {
            let r = self.range(ind);
            if !(r.min.is_finite() && r.max.is_finite()) || r.min > r.max {
                return Err(ClassifierError::InvalidStats(format!(
                    "{} range [{}, {}] is not a finite ordered interval",
                    ind.symbol(),
                    r.min,
                    r.max
                )));
            }
        }
        Ok(())
    }

    pub fn range(&self, indicator: Indicator) -> Range {
        match indicator {
            Indicator::Energy => self.energy,
            Indicator::Amplitude => self.amplitude,
            Indicator::ZeroCrossing => self.zero_crossings,
        }
    }
}

/// Indicators scaled into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedFeatures {
    pub energy: f64,
    pub amplitude: f64,
    pub zero_crossings: f64,
}

/// Weights and decision threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub v_threshold: f64,
}

impl Default for ClassifierParams {
    /// The published operating point: a = 0.01, b = 0.98, c = 0.01, V' = 0.01.
    fn default() -> Self {
        Self {
            a: 0.01,
            b: 0.98,
            c: 0.01,
            v_threshold: 0.01,
        }
    }
}

impl ClassifierParams {
    pub fn new(a: f64, b: f64, c: f64, v_threshold: f64) -> Result<Self, ClassifierError> {
        let p = Self { a, b, c, v_threshold };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let weights = [self.a, self.b, self.c];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ClassifierError::InvalidParams(format!(
                "weights ({}, {}, {}) must be finite and non-negative",
                self.a, self.b, self.c
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(ClassifierError::InvalidParams(format!("weights sum to {sum}, not 1")));
        }
        if !(0.0..=1.0).contains(&self.v_threshold) {
            return Err(ClassifierError::InvalidParams(format!(
                "threshold {} outside [0, 1]",
                self.v_threshold
            )));
        }
        Ok(())
    }

    pub fn weight(&self, indicator: Indicator) -> f64 {
        match indicator {
            Indicator::Energy => self.a,
            Indicator::Amplitude => self.b,
            Indicator::ZeroCrossing => self.c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Human,
    Bot,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Human => "human",
            Verdict::Bot => "bot",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub score: f64,
    pub features: NormalizedFeatures,
}

/// Per-indicator min and max over the dataset.
pub fn fit_normalizer<'a, I>(dataset: I) -> Result<NormalizationStats, ClassifierError>
where
    I: IntoIterator<Item = &'a RawFeatures>,
{
    let mut it = dataset.into_iter();
    let first = it.next().ok_or(ClassifierError::EmptyDataset)?;
    let point = |x: f64| Range { min: x, max: x };
    let mut stats = NormalizationStats {
        energy: point(first.energy),
        amplitude: point(first.amplitude),
        zero_crossings: point(first.zero_crossings),
    };
    for raw in it {
        for (range, x) in [
            (&mut stats.energy, raw.energy),
            (&mut stats.amplitude, raw.amplitude),
            (&mut stats.zero_crossings, raw.zero_crossings),
        ] {
            range.min = range.min.min(x);
            range.max = range.max.max(x);
        }
    }
    Ok(stats)
}

/// `(x - min) / (max - min)` clamped to `[0, 1]`; a degenerate range maps to 0.5.
pub fn normalize(raw: &RawFeatures, stats: &NormalizationStats) -> NormalizedFeatures {
    NormalizedFeatures {
        energy: stats.energy.scale(raw.energy),
        amplitude: stats.amplitude.scale(raw.amplitude),
        zero_crossings: stats.zero_crossings.scale(raw.zero_crossings),
    }
}

pub fn score(features: &NormalizedFeatures, params: &ClassifierParams) -> f64 {
    params.a * features.energy + params.b * features.amplitude + params.c * features.zero_crossings
}

/// Bot iff the score is strictly above the threshold.
pub fn verdict_for(v: f64, threshold: f64) -> Verdict {
    if v > threshold {
        Verdict::Bot
    } else {
        Verdict::Human
    }
}

pub fn decide(v: f64, features: NormalizedFeatures, params: &ClassifierParams) -> Decision {
    Decision {
        verdict: verdict_for(v, params.v_threshold),
        score: v,
        features,
    }
}

/// normalize → score → decide.
pub fn classify(raw: &RawFeatures, stats: &NormalizationStats, params: &ClassifierParams) -> Decision {
    let features = normalize(raw, stats);
    decide(score(&features, params), features, params)
}
