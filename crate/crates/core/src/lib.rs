//! Voice liveness analysis for a spoken-sentence CAPTCHA.
//!
//! A recording is framed into 20 ms Hamming-windowed frames, reduced to three
//! file-level time-domain indicators (short-term energy, average amplitude and
//! zero-crossing count), min-max normalised against calibration statistics
//! and scored as `V = a·E + b·M + c·Z`. Scores above the threshold `V'` are
//! classified as synthetic.
//!
//! ```
//! use voxcap_core::{analysis, framing::FramingConfig, model::Model, wav};
//!
//! let buffer = wav::AudioBuffer::new(vec![0; 16_000], 16_000).unwrap();
//! let bytes = wav::write_wav(&buffer);
//! let result = analysis::analyze_wav(&bytes, &FramingConfig::default(), &Model::shipped_default()).unwrap();
//! println!("{} (V = {})", result.decision.verdict, result.decision.score);
//! ```

pub mod analysis;
pub mod calibration;
pub mod challenge;
pub mod classifier;
pub mod features;
pub mod fixtures;
pub mod framing;
pub mod manifest;
pub mod model;
pub mod wav;

pub use analysis::{analyze_buffer, analyze_wav, Analysis, AnalysisError};
pub use classifier::{ClassifierParams, Decision, NormalizationStats, NormalizedFeatures, Verdict};
pub use features::{Indicator, RawFeatures};
pub use framing::FramingConfig;
pub use model::Model;
pub use wav::AudioBuffer;
