//! Independent reference implementations shared by the integration and
//! acceptance suites. Nothing here calls into the library's signal or search
//! code; only plain data types are borrowed.

#![allow(dead_code)]

use rand::{Rng, RngCore};
use voxcap_core::calibration::{Label, LabeledSample};
use voxcap_core::RawFeatures;

/// Hamming coefficients for N = 50, evaluated in Python as
/// `0.54 - 0.46 * math.cos(2 * math.pi * n / 49)`.
pub const HAMMING_50: [f64; 50] = [
    0.08000000000000002,
    0.0837765936413068,
    0.0950443630020465,
    0.11361829162083004,
    0.13919339610324089,
    0.17134973394074,
    0.20955929895504533,
    0.25319469114498255,
    0.3015394185771585,
    0.3537996621636989,
    0.4091173101497251,
    0.46658404828464545,
    0.5252562743170386,
    0.5841705919175336,
    0.6423596296199047,
    0.6988679250338015,
    0.7527676135107841,
    0.8031736636561981,
    0.8492584095202058,
    0.8902651408498018,
    0.9255205282502468,
    0.9544456792351128,
    0.9765656436249075,
    0.9915172122158902,
    0.9990548806651547,
    0.9990548806651547,
    0.9915172122158902,
    0.9765656436249076,
    0.9544456792351128,
    0.9255205282502468,
    0.8902651408498019,
    0.8492584095202058,
    0.8031736636561982,
    0.7527676135107843,
    0.6988679250338015,
    0.6423596296199048,
    0.5841705919175335,
    0.5252562743170388,
    0.46658404828464595,
    0.4091173101497253,
    0.3537996621636989,
    0.30153941857715877,
    0.25319469114498266,
    0.2095592989550456,
    0.17134973394074027,
    0.13919339610324089,
    0.11361829162083009,
    0.0950443630020465,
    0.08377659364130685,
    0.08000000000000002,
];

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Textbook Hamming value at `n` of an `len`-point window.
pub fn hamming_at(n: usize, len: usize) -> f64 {
    if len == 1 {
        return 1.0;
    }
    0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / (len - 1) as f64).cos()
}

/// Straight-line reading of the three indicators: walk frame starts
/// `0, hop, 2 hop, ...` until a frame reaches the end of the signal,
/// zero-pad, weight sample `n` by the `window`-point Hamming value at
/// `n mod window`, and accumulate E, M and Z per frame.
pub fn naive_features(samples: &[i16], frame: usize, hop: usize, window: usize) -> RawFeatures {
    let mut total = RawFeatures::ZERO;
    let mut start = 0usize;
    loop {
        let mut e = 0.0;
        let mut m = 0.0;
        let mut z = 0.0;
        let mut prev_sign = 0i32;
        for n in 0..frame {
            let x = samples.get(start + n).copied().map_or(0.0, f64::from);
            let s = x * hamming_at(n % window, window);
            e += s * s;
            m += s.abs();
            let sign = if s >= 0.0 { 1 } else { -1 };
            if n > 0 && sign != prev_sign {
                z += 1.0;
            }
            prev_sign = sign;
        }
        total.energy += e;
        total.amplitude += m;
        total.zero_crossings += z;
        total.frame_count += 1;
        if start + frame >= samples.len() {
            break;
        }
        start += hop;
    }
    total
}

/// A mixture of tones, noise, silence runs and clipping at random gain.
pub fn random_signal<R: RngCore>(rng: &mut R, len: usize) -> Vec<i16> {
    let gain: f64 = rng.random_range(0.0..32767.0);
    let freq: f64 = rng.random_range(0.001..0.4);
    let noise: f64 = rng.random_range(0.0..1.0);
    let mut phase = 0.0f64;
    (0..len)
        .map(|i| {
            phase += 2.0 * std::f64::consts::PI * freq;
            if (i / 997) % 5 == 4 {
                return 0;
            }
            let v = (1.0 - noise) * phase.sin() + noise * rng.random_range(-1.0..1.0);
            (gain * v).round().clamp(-32768.0, 32767.0) as i16
        })
        .collect()
}

fn raw(energy: f64, amplitude: f64, zero_crossings: f64) -> RawFeatures {
    RawFeatures {
        energy,
        amplitude,
        zero_crossings,
        frame_count: 1,
    }
}

/// Twelve hand-picked feature vectors: amplitude separates the classes
/// cleanly, energy overlaps, and zero crossings run against the score.
pub fn hand_corpus() -> Vec<LabeledSample> {
    let natural = [
        (10.0, 2.0, 90.0),
        (30.0, 1.0, 80.0),
        (20.0, 3.0, 100.0),
        (60.0, 2.5, 70.0),
        (45.0, 4.0, 95.0),
        (15.0, 1.5, 85.0),
    ];
    let synthesized = [
        (50.0, 8.0, 20.0),
        (25.0, 9.0, 30.0),
        (70.0, 7.0, 10.0),
        (40.0, 10.0, 40.0),
        (55.0, 6.0, 25.0),
        (35.0, 8.5, 15.0),
    ];
    let tag = |label: Label, rows: &[(f64, f64, f64)]| -> Vec<LabeledSample> {
        rows.iter()
            .enumerate()
            .map(|(i, &(e, m, z))| LabeledSample {
                features: raw(e, m, z),
                label,
                source_id: format!("{label}-{i}"),
            })
            .collect()
    };
    let mut out = tag(Label::Natural, &natural);
    out.extend(tag(Label::Synthesized, &synthesized));
    out
}

/// `(a, b, c, threshold, misjudgment, recognition)`.
pub type OraclePoint = (f64, f64, f64, f64, f64, f64);

/// Enumerates `a = i/n, b = j/n, c = (n-i-j)/n` and every threshold, scoring
/// each sample from scratch. Returns the accepted points in enumeration
/// order and the best one.
pub fn brute_force_grid(
    corpus: &[LabeledSample],
    divisions: u32,
    thresholds: &[f64],
) -> (Vec<OraclePoint>, Option<OraclePoint>) {
    let column = |f: fn(&RawFeatures) -> f64| -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in corpus {
            lo = lo.min(f(&s.features));
            hi = hi.max(f(&s.features));
        }
        (lo, hi)
    };
    let scale = |(lo, hi): (f64, f64), x: f64| {
        if hi == lo {
            0.5
        } else {
            ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
        }
    };
    let e_range = column(|r| r.energy);
    let m_range = column(|r| r.amplitude);
    let z_range = column(|r| r.zero_crossings);

    let n_nat = corpus.iter().filter(|s| s.label == Label::Natural).count() as f64;
    let n_syn = corpus.len() as f64 - n_nat;
    let d = f64::from(divisions);
    let mut accepted = Vec::new();
    for i in 0..=divisions {
        for j in 0..=(divisions - i) {
            let (a, b, c) = (f64::from(i) / d, f64::from(j) / d, f64::from(divisions - i - j) / d);
            for &t in thresholds {
                let mut nat_bot = 0.0;
                let mut syn_bot = 0.0;
                for s in corpus {
                    let v = a * scale(e_range, s.features.energy)
                        + b * scale(m_range, s.features.amplitude)
                        + c * scale(z_range, s.features.zero_crossings);
                    if v > t {
                        match s.label {
                            Label::Natural => nat_bot += 1.0,
                            Label::Synthesized => syn_bot += 1.0,
                        }
                    }
                }
                let (mis, rec) = (nat_bot / n_nat, syn_bot / n_syn);
                if mis < 0.10 && rec > 0.90 {
                    accepted.push((a, b, c, t, mis, rec));
                }
            }
        }
    }
    let best = accepted.iter().copied().min_by(|x, y| {
        // recognition high, then misjudgment, threshold, a, b, c low
        y.5.partial_cmp(&x.5)
            .unwrap()
            .then(x.4.partial_cmp(&y.4).unwrap())
            .then(x.3.partial_cmp(&y.3).unwrap())
            .then(x.0.partial_cmp(&y.0).unwrap())
            .then(x.1.partial_cmp(&y.1).unwrap())
            .then(x.2.partial_cmp(&y.2).unwrap())
    });
    (accepted, best)
}

pub fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
