//! Short-time framing and Hamming windowing.

use std::f64::consts::PI;

use thiserror::Error;

use crate::wav::AudioBuffer;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FramingError {
    #[error("window length {0} is invalid (need at least 2 coefficients)")]
    InvalidLength(usize),
    #[error("invalid framing config: {0}")]
    InvalidConfig(String),
    #[error("window has {coefficients} coefficients but frame has {frame} samples")]
    LengthMismatch { frame: usize, coefficients: usize },
    #[error("window length {window} does not evenly divide the {frame}-sample frame")]
    WindowDoesNotTile { frame: usize, window: usize },
}

/// How many Hamming coefficients make up one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowLength {
    /// One window spanning the whole frame.
    FullFrame,
    /// A fixed-size window repeated back to back across the frame.
    ///
    /// The frame length in samples must be a multiple of this value.
    Samples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramingConfig {
    pub frame_len_ms: f64,
    pub hop_len_ms: f64,
    pub window_len: WindowLength,
}

impl Default for FramingConfig {
    /// 20 ms frames, 10 ms shift, full-frame window.
    fn default() -> Self {
        Self {
            frame_len_ms: 20.0,
            hop_len_ms: 10.0,
            window_len: WindowLength::FullFrame,
        }
    }
}

/// Geometry of a config resolved against a sample rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGeometry {
    pub frame_len: usize,
    pub hop_len: usize,
    pub window_len: usize,
}

impl FramingConfig {
    /// The literal reading of the original scheme: 20 ms frames at 5 kHz
    /// (100 samples) with a 50-sample window over each half-frame.
    pub fn paper_mode() -> Self {
        Self {
            window_len: WindowLength::Samples(50),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FramingError> {
        if !(self.frame_len_ms.is_finite() && self.frame_len_ms > 0.0) {
            return Err(FramingError::InvalidConfig(format!(
                "frame length {} ms must be positive",
                self.frame_len_ms
            )));
        }
        if !(self.hop_len_ms.is_finite() && self.hop_len_ms > 0.0 && self.hop_len_ms <= self.frame_len_ms) {
            return Err(FramingError::InvalidConfig(format!(
                "hop {} ms must lie in (0, {}]",
                self.hop_len_ms, self.frame_len_ms
            )));
        }
        if let WindowLength::Samples(n) = self.window_len {
            if n < 2 {
                return Err(FramingError::InvalidLength(n));
            }
        }
        Ok(())
    }

    /// Converts millisecond lengths to sample counts at `sample_rate`.
    pub fn geometry(&self, sample_rate: u32) -> Result<FrameGeometry, FramingError> {
        self.validate()?;
        let to_samples = |ms: f64| (ms * f64::from(sample_rate) / 1000.0).round() as usize;
        let frame_len = to_samples(self.frame_len_ms);
        let hop_len = to_samples(self.hop_len_ms).min(frame_len);
        if frame_len == 0 || hop_len == 0 {
            return Err(FramingError::InvalidConfig(format!(
                "{} ms frame / {} ms hop is shorter than one sample at {sample_rate} Hz",
                self.frame_len_ms, self.hop_len_ms
            )));
        }
        let window_len = match self.window_len {
            WindowLength::FullFrame => frame_len,
            WindowLength::Samples(n) => n,
        };
        if window_len < 2 {
            return Err(FramingError::InvalidLength(window_len));
        }
        if frame_len % window_len != 0 {
            return Err(FramingError::WindowDoesNotTile {
                frame: frame_len,
                window: window_len,
            });
        }
        Ok(FrameGeometry {
            frame_len,
            hop_len,
            window_len,
        })
    }

    /// Per-sample coefficients for one frame at `sample_rate`.
    pub fn frame_coefficients(&self, sample_rate: u32) -> Result<Vec<f64>, FramingError> {
        let g = self.geometry(sample_rate)?;
        let window = hamming_coefficients(g.window_len)?;
        Ok(window.iter().copied().cycle().take(g.frame_len).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub index: usize,
    pub samples: Vec<i16>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedFrame {
    pub index: usize,
    pub samples: Vec<f64>,
}

/// Hamming window `w(n) = 0.54 - 0.46 cos(2πn / (N-1))` for `0 <= n < N`.
///
/// Evaluated as `0.08 + 0.46 (1 - cos θ)`, which is algebraically the same
/// but makes the endpoints exactly 0.08. The second half mirrors the first so
/// the sequence is exactly symmetric.
pub fn hamming_coefficients(len: usize) -> Result<Vec<f64>, FramingError> {
    if len < 2 {
        return Err(FramingError::InvalidLength(len));
    }
    let denom = (len - 1) as f64;
    let mut w = vec![0.0; len];
    for n in 0..len.div_ceil(2) {
        let theta = 2.0 * PI * n as f64 / denom;
        let v = 0.08 + 0.46 * (1.0 - theta.cos());
        w[n] = v;
        w[len - 1 - n] = v;
    }
    Ok(w)
}

/// Number of frames produced for a signal of `len` samples.
pub fn frame_count(len: usize, frame_len: usize, hop_len: usize) -> usize {
    let span = (len + hop_len).saturating_sub(frame_len).max(1);
    span.div_ceil(hop_len)
}

/// Splits the buffer into equal-length frames starting every hop; the last
/// frame is zero-padded. A signal shorter than one frame yields one frame.
pub fn frame_signal(buffer: &AudioBuffer, config: &FramingConfig) -> Result<Vec<Frame>, FramingError> {
    let g = config.geometry(buffer.sample_rate())?;
    Ok(frames_of(buffer.samples(), g.frame_len, g.hop_len).collect())
}

pub(crate) fn frames_of(samples: &[i16], frame_len: usize, hop_len: usize) -> impl Iterator<Item = Frame> + '_ {
    (0..frame_count(samples.len(), frame_len, hop_len)).map(move |index| {
        let start = index * hop_len;
        let end = (start + frame_len).min(samples.len());
        let mut frame = Vec::with_capacity(frame_len);
        frame.extend_from_slice(&samples[start.min(end)..end]);
        frame.resize(frame_len, 0);
        Frame { index, samples: frame }
    })
}

/// Pointwise product of a frame with window coefficients of the same length.
pub fn apply_window(frame: &Frame, coefficients: &[f64]) -> Result<WindowedFrame, FramingError> {
    if frame.samples.len() != coefficients.len() {
        return Err(FramingError::LengthMismatch {
            frame: frame.samples.len(),
            coefficients: coefficients.len(),
        });
    }
    Ok(WindowedFrame {
        index: frame.index,
        samples: frame
            .samples
            .iter()
            .zip(coefficients)
            .map(|(&x, &w)| w * f64::from(x))
            .collect(),
    })
}
