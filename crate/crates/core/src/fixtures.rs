//! Seeded synthetic fixture corpora.
//!
//! Two families stand in for recorded corpora. The natural-like family is
//! built from irregular voiced bursts with pitch jitter, varying loudness,
//! pauses and a noise floor. The synthetic-like family is loud, steady and
//! nearly noise-free with a fixed pitch and flat envelope. The families
//! differ most in average amplitude.

use std::f64::consts::PI;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::calibration::Label;
use crate::wav::{write_wav, AudioBuffer, WavError};

pub const MANIFEST_NAME: &str = "manifest.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureSpec {
    pub seed: u64,
    pub natural: usize,
    pub synthesized: usize,
    pub sample_rate: u32,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            seed: 42,
            natural: 50,
            synthesized: 50,
            sample_rate: 16000,
        }
    }
}

/// One generated file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub label: Label,
    pub name: String,
    pub buffer: AudioBuffer,
}

fn file_seed(seed: u64, label: Label, index: usize) -> u64 {
    // splitmix64 finaliser over the combined inputs
    let mut z = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((index as u64) << 1 | label as u64);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn to_pcm(signal: &[f64]) -> Vec<i16> {
    signal
        .iter()
        .map(|&v| v.round().clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16)
        .collect()
}

fn natural_like(rng: &mut ChaCha8Rng, rate: u32) -> Vec<f64> {
    let fs = f64::from(rate);
    let len = (fs * rng.random_range(2.0..3.0)) as usize;
    let noise = Normal::new(0.0, rng.random_range(60.0..180.0)).expect("valid sigma");
    let base_f0: f64 = rng.random_range(95.0..230.0);
    let mut out: Vec<f64> = (0..len).map(|_| noise.sample(rng)).collect();

    let mut pos = (fs * rng.random_range(0.05..0.25)) as usize;
    while pos < len {
        let seg = ((fs * rng.random_range(0.08..0.26)) as usize).min(len - pos);
        let peak = rng.random_range(1200.0..5000.0);
        let mut f0 = base_f0 * rng.random_range(0.85..1.15);
        let harmonics: Vec<f64> = (1..=6).map(|h| rng.random_range(0.2..1.0) / f64::from(h)).collect();
        let norm: f64 = harmonics.iter().sum();
        let mut phase = 0.0f64;
        for i in 0..seg {
            // slow random walk on pitch
            f0 = (f0 * (1.0 + rng.random_range(-0.002..0.002))).clamp(70.0, 320.0);
            phase += 2.0 * PI * f0 / fs;
            let env = (PI * i as f64 / seg as f64).sin().powf(1.5);
            let voiced: f64 = harmonics
                .iter()
                .enumerate()
                .map(|(h, a)| a * (phase * (h + 1) as f64).sin())
                .sum::<f64>()
                / norm;
            out[pos + i] += peak * env * voiced;
        }
        pos += seg + (fs * rng.random_range(0.03..0.22)) as usize;
    }
    out
}

fn synthetic_like(rng: &mut ChaCha8Rng, rate: u32) -> Vec<f64> {
    let fs = f64::from(rate);
    let len = (fs * rng.random_range(2.0..3.0)) as usize;
    let noise = Normal::new(0.0, 8.0).expect("valid sigma");
    let f0: f64 = rng.random_range(110.0..180.0);
    let peak = rng.random_range(9000.0..14000.0);
    let harmonics = [1.0, 0.5, 0.33, 0.25, 0.2, 0.16];
    let norm: f64 = harmonics.iter().sum();
    let seg = (fs * 0.2) as usize;
    let gap = (fs * 0.01) as usize;
    let ramp = (fs * 0.005) as usize;

    let mut out = vec![0.0; len];
    let mut phase = 0.0f64;
    let mut pos = 0;
    while pos < len {
        let n = seg.min(len - pos);
        for i in 0..n {
            phase += 2.0 * PI * f0 / fs;
            let edge = i.min(n - 1 - i);
            let env = if edge < ramp { edge as f64 / ramp as f64 } else { 1.0 };
            let tone: f64 = harmonics
                .iter()
                .enumerate()
                .map(|(h, a)| a * (phase * (h + 1) as f64).sin())
                .sum::<f64>()
                / norm;
            out[pos + i] = peak * env * tone;
        }
        pos += n + gap;
    }
    for v in &mut out {
        *v += noise.sample(rng);
    }
    out
}

/// Deterministically generates file `index` of the given family.
pub fn generate(label: Label, seed: u64, index: usize, sample_rate: u32) -> Result<AudioBuffer, WavError> {
    let mut rng = ChaCha8Rng::seed_from_u64(file_seed(seed, label, index));
    let signal = match label {
        Label::Natural => natural_like(&mut rng, sample_rate),
        Label::Synthesized => synthetic_like(&mut rng, sample_rate),
    };
    AudioBuffer::new(to_pcm(&signal), sample_rate)
}

/// Every fixture of a spec, naturals first, in index order.
pub fn generate_set(spec: &FixtureSpec) -> Result<Vec<Fixture>, WavError> {
    let mut out = Vec::with_capacity(spec.natural + spec.synthesized);
    for (label, count) in [(Label::Natural, spec.natural), (Label::Synthesized, spec.synthesized)] {
        for i in 0..count {
            out.push(Fixture {
                label,
                name: format!("{label}_{i:03}.wav"),
                buffer: generate(label, spec.seed, i, spec.sample_rate)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// Writes the WAV files and a `manifest.csv` into `dir`; returns the
/// manifest path.
pub fn write_set(spec: &FixtureSpec, dir: &Path) -> Result<PathBuf, FixtureError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| FixtureError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = String::new();
    for f in generate_set(spec)? {
        let path = dir.join(&f.name);
        fs::write(&path, write_wav(&f.buffer)).map_err(io_err(&path))?;
        manifest.push_str(&format!("{},{}\n", f.label, f.name));
    }
    let manifest_path = dir.join(MANIFEST_NAME);
    fs::write(&manifest_path, manifest).map_err(io_err(&manifest_path))?;
    Ok(manifest_path)
}
