//! Parameter determination against a labelled corpus.
//!
//! Two procedures are provided. [`sweep_single_indicator`] thresholds one raw
//! indicator at a time. [`grid_search`] enumerates every weight triple on an
//! exact simplex lattice, crosses it with every candidate threshold, and picks
//! the operating point that best meets the acceptance rule: misjudgment of
//! natural speech below 10% and recognition of synthesized speech above 90%.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{
    fit_normalizer, normalize, score, verdict_for, ClassifierError, ClassifierParams, NormalizationStats,
    NormalizedFeatures, Verdict,
};
use crate::features::{Indicator, RawFeatures};

/// Misjudgment must be strictly below this.
pub const MAX_MISJUDGMENT: f64 = 0.10;
/// Recognition must be strictly above this.
pub const MIN_RECOGNITION: f64 = 0.90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Natural,
    Synthesized,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Natural => "natural",
            Label::Synthesized => "synthesized",
        })
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "natural" => Ok(Label::Natural),
            "synthesized" => Ok(Label::Synthesized),
            other => Err(format!("unknown label {other:?} (expected natural or synthesized)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: RawFeatures,
    pub label: Label,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("corpus has no {0} samples")]
    MissingClass(Label),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no parameter combination meets the acceptance rule")]
    NoAcceptableCombo(Box<CalibrationReport>),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Misjudgment of natural speech and recognition of synthesized speech.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub misjudgment_rate: f64,
    pub recognition_rate: f64,
}

impl RatePair {
    fn from_counts(natural_bot: usize, natural: usize, synth_bot: usize, synth: usize) -> Self {
        Self {
            misjudgment_rate: natural_bot as f64 / natural as f64,
            recognition_rate: synth_bot as f64 / synth as f64,
        }
    }

    pub fn is_acceptable(&self) -> bool {
        self.misjudgment_rate < MAX_MISJUDGMENT && self.recognition_rate > MIN_RECOGNITION
    }
}

fn class_sizes(corpus: &[LabeledSample]) -> Result<(usize, usize), CalibrationError> {
    let natural = corpus.iter().filter(|s| s.label == Label::Natural).count();
    let synth = corpus.len() - natural;
    if natural == 0 {
        return Err(CalibrationError::MissingClass(Label::Natural));
    }
    if synth == 0 {
        return Err(CalibrationError::MissingClass(Label::Synthesized));
    }
    Ok((natural, synth))
}

/// Runs normalize → score → decide on every sample and tallies both rates.
pub fn evaluate(
    params: &ClassifierParams,
    stats: &NormalizationStats,
    corpus: &[LabeledSample],
) -> Result<RatePair, CalibrationError> {
    let (natural, synth) = class_sizes(corpus)?;
    let (mut natural_bot, mut synth_bot) = (0, 0);
    for s in corpus {
        let v = score(&normalize(&s.features, stats), params);
        if verdict_for(v, params.v_threshold) == Verdict::Bot {
            match s.label {
                Label::Natural => natural_bot += 1,
                Label::Synthesized => synth_bot += 1,
            }
        }
    }
    Ok(RatePair::from_counts(natural_bot, natural, synth_bot, synth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub rates: RatePair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub indicator: Indicator,
    pub rows: Vec<SweepRow>,
}

/// Classifies bot iff the raw indicator exceeds each threshold in turn.
pub fn sweep_single_indicator(
    indicator: Indicator,
    thresholds: &[f64],
    corpus: &[LabeledSample],
) -> Result<SweepTable, CalibrationError> {
    let (natural, synth) = class_sizes(corpus)?;
    let rows = thresholds
        .iter()
        .map(|&t| {
            let count = |label| {
                corpus
                    .iter()
                    .filter(|s| s.label == label && s.features.get(indicator) > t)
                    .count()
            };
            SweepRow {
                threshold: t,
                rates: RatePair::from_counts(count(Label::Natural), natural, count(Label::Synthesized), synth),
            }
        })
        .collect();
    Ok(SweepTable { indicator, rows })
}

/// `rows` evenly spaced thresholds spanning the corpus range of `indicator`.
pub fn default_sweep_thresholds(indicator: Indicator, corpus: &[LabeledSample], rows: usize) -> Vec<f64> {
    let values = corpus.iter().map(|s| s.features.get(indicator));
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || rows == 0 {
        return Vec::new();
    }
    if rows == 1 || lo == hi {
        return vec![lo];
    }
    let mut out: Vec<f64> = (0..rows)
        .map(|k| lo + (hi - lo) * k as f64 / (rows - 1) as f64)
        .collect();
    out.dedup();
    out
}

/// A point on the weight simplex, held as integer units of `1 / divisions`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightTriple {
    pub a_units: u32,
    pub b_units: u32,
    pub c_units: u32,
    pub divisions: u32,
}

impl WeightTriple {
    pub fn weights(&self) -> (f64, f64, f64) {
        let d = f64::from(self.divisions);
        (
            f64::from(self.a_units) / d,
            f64::from(self.b_units) / d,
            f64::from(self.c_units) / d,
        )
    }

    pub fn params(&self, v_threshold: f64) -> ClassifierParams {
        let (a, b, c) = self.weights();
        ClassifierParams { a, b, c, v_threshold }
    }
}

/// All triples with `a + b + c = divisions` units, `a` then `b` ascending.
pub fn weight_triples(divisions: u32) -> Vec<WeightTriple> {
    let mut out = Vec::with_capacity(simplex_size(divisions));
    for a in 0..=divisions {
        for b in 0..=divisions - a {
            out.push(WeightTriple {
                a_units: a,
                b_units: b,
                c_units: divisions - a - b,
                divisions,
            });
        }
    }
    out
}

/// `C(n + 2, 2)`, the number of lattice points on the simplex.
pub fn simplex_size(divisions: u32) -> usize {
    let n = divisions as usize;
    (n + 1) * (n + 2) / 2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    weight_divisions: u32,
    thresholds: Vec<f64>,
}

const MAX_DIVISIONS: u32 = 10_000;

impl GridSpec {
    pub fn new(weight_step: f64, thresholds: Vec<f64>) -> Result<Self, CalibrationError> {
        if !(weight_step.is_finite() && weight_step > 0.0 && weight_step <= 1.0) {
            return Err(CalibrationError::InvalidGrid(format!(
                "weight step {weight_step} must lie in (0, 1]"
            )));
        }
        let n = (1.0 / weight_step).round();
        if n > f64::from(MAX_DIVISIONS) || (n * weight_step - 1.0).abs() > 1e-9 {
            return Err(CalibrationError::InvalidGrid(format!(
                "weight step {weight_step} does not divide 1 into at most {MAX_DIVISIONS} equal parts"
            )));
        }
        Self::with_divisions(n as u32, thresholds)
    }

    pub fn with_divisions(weight_divisions: u32, thresholds: Vec<f64>) -> Result<Self, CalibrationError> {
        if weight_divisions == 0 || weight_divisions > MAX_DIVISIONS {
            return Err(CalibrationError::InvalidGrid(format!(
                "weight divisions {weight_divisions} outside 1..={MAX_DIVISIONS}"
            )));
        }
        if thresholds.is_empty() {
            return Err(CalibrationError::InvalidGrid("no threshold values".into()));
        }
        if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(CalibrationError::InvalidGrid("thresholds must lie in [0, 1]".into()));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CalibrationError::InvalidGrid(
                "thresholds must be strictly ascending".into(),
            ));
        }
        Ok(Self {
            weight_divisions,
            thresholds,
        })
    }

    /// `count + 1` thresholds `k / count` for `k = 0..=count`.
    pub fn uniform_thresholds(count: u32) -> Vec<f64> {
        (0..=count).map(|k| f64::from(k) / f64::from(count)).collect()
    }

    pub fn weight_divisions(&self) -> u32 {
        self.weight_divisions
    }

    pub fn weight_step(&self) -> f64 {
        1.0 / f64::from(self.weight_divisions)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn triples(&self) -> Vec<WeightTriple> {
        weight_triples(self.weight_divisions)
    }
}

impl Default for GridSpec {
    /// Weight step 0.01, thresholds 0 to 1 in steps of 0.005.
    fn default() -> Self {
        Self::with_divisions(100, Self::uniform_thresholds(200)).expect("default grid is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub params: ClassifierParams,
    pub rates: RatePair,
    #[serde(skip)]
    triple: Option<WeightTriple>,
}

impl GridPoint {
    fn new(triple: WeightTriple, v_threshold: f64, rates: RatePair) -> Self {
        Self {
            params: triple.params(v_threshold),
            rates,
            triple: Some(triple),
        }
    }

    pub fn triple(&self) -> Option<WeightTriple> {
        self.triple
    }
}

/// Selection order: recognition descending, then misjudgment, threshold and
/// `(a, b, c)` ascending. `Less` means `x` ranks ahead of `y`.
pub fn rank(x: &GridPoint, y: &GridPoint) -> Ordering {
    y.rates
        .recognition_rate
        .total_cmp(&x.rates.recognition_rate)
        .then(x.rates.misjudgment_rate.total_cmp(&y.rates.misjudgment_rate))
        .then(x.params.v_threshold.total_cmp(&y.params.v_threshold))
        .then(x.params.a.total_cmp(&y.params.a))
        .then(x.params.b.total_cmp(&y.params.b))
        .then(x.params.c.total_cmp(&y.params.c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub best: Option<GridPoint>,
    /// Accepted combinations in enumeration order.
    pub accepted: Vec<GridPoint>,
    pub sweep_tables: Vec<SweepTable>,
    /// Rates against every threshold for the best weights (or, when nothing
    /// is accepted, for the highest-ranked combination overall).
    pub curve: Vec<GridPoint>,
    pub weight_triples: usize,
    pub combinations: usize,
    pub stats: NormalizationStats,
}

impl CalibrationReport {
    /// Best accepted operating point, or the top-ranked one when none passes.
    pub fn operating_point(&self) -> Option<&GridPoint> {
        self.best
            .as_ref()
            .or_else(|| self.curve.iter().min_by(|x, y| rank_by_acceptability(x, y)))
    }

    pub fn top_accepted(&self, n: usize) -> Vec<GridPoint> {
        let mut v = self.accepted.clone();
        v.sort_by(rank);
        v.truncate(n);
        v
    }
}

/// Orders by how close a point comes to the acceptance rule, then by `rank`.
fn rank_by_acceptability(x: &GridPoint, y: &GridPoint) -> Ordering {
    let deficit = |p: &GridPoint| {
        (p.rates.misjudgment_rate - MAX_MISJUDGMENT).max(0.0) + (MIN_RECOGNITION - p.rates.recognition_rate).max(0.0)
    };
    deficit(x).total_cmp(&deficit(y)).then_with(|| rank(x, y))
}

struct ClassScores {
    natural: Vec<f64>,
    synth: Vec<f64>,
}

impl ClassScores {
    fn compute(samples: &[(Label, NormalizedFeatures)], params: &ClassifierParams) -> Self {
        let mut natural = Vec::new();
        let mut synth = Vec::new();
        for (label, f) in samples {
            let v = score(f, params);
            match label {
                Label::Natural => natural.push(v),
                Label::Synthesized => synth.push(v),
            }
        }
        natural.sort_by(f64::total_cmp);
        synth.sort_by(f64::total_cmp);
        Self { natural, synth }
    }

    fn rates_at(&self, t: f64) -> RatePair {
        let above = |sorted: &[f64]| sorted.len() - sorted.partition_point(|&v| v <= t);
        RatePair::from_counts(
            above(&self.natural),
            self.natural.len(),
            above(&self.synth),
            self.synth.len(),
        )
    }
}

fn curve_for(samples: &[(Label, NormalizedFeatures)], triple: WeightTriple, thresholds: &[f64]) -> Vec<GridPoint> {
    let scores = ClassScores::compute(samples, &triple.params(0.0));
    thresholds
        .iter()
        .map(|&t| GridPoint::new(triple, t, scores.rates_at(t)))
        .collect()
}

/// Exhaustive search over weight triples × thresholds.
///
/// Single-indicator sweep tables are attached using
/// [`DEFAULT_SWEEP_ROWS`] evenly spaced raw thresholds per indicator.
pub fn grid_search(
    corpus: &[LabeledSample],
    stats: &NormalizationStats,
    spec: &GridSpec,
) -> Result<CalibrationReport, CalibrationError> {
    class_sizes(corpus)?;
    let samples: Vec<(Label, NormalizedFeatures)> = corpus
        .iter()
        .map(|s| (s.label, normalize(&s.features, stats)))
        .collect();
    let triples = spec.triples();

    // per-triple results are collected in enumeration order regardless of
    // which worker finishes first
    let per_triple: Vec<(Vec<GridPoint>, GridPoint)> = triples
        .par_iter()
        .map(|&triple| {
            let scores = ClassScores::compute(&samples, &triple.params(0.0));
            let mut accepted = Vec::new();
            let mut closest: Option<GridPoint> = None;
            for &t in spec.thresholds() {
                let p = GridPoint::new(triple, t, scores.rates_at(t));
                if p.rates.is_acceptable() {
                    accepted.push(p);
                }
                if closest
                    .as_ref()
                    .is_none_or(|c| rank_by_acceptability(&p, c) == Ordering::Less)
                {
                    closest = Some(p);
                }
            }
            (accepted, closest.expect("grid has at least one threshold"))
        })
        .collect();

    let mut accepted = Vec::new();
    let mut closest: Option<GridPoint> = None;
    for (acc, c) in per_triple {
        accepted.extend(acc);
        if closest
            .as_ref()
            .is_none_or(|best| rank_by_acceptability(&c, best) == Ordering::Less)
        {
            closest = Some(c);
        }
    }
    let best = accepted.iter().copied().min_by(rank);
    let curve_triple = best
        .or(closest)
        .and_then(|p| p.triple)
        .expect("grid has at least one triple");

    let mut sweep_tables = Vec::with_capacity(3);
    for ind in Indicator::ALL {
        let thresholds = default_sweep_thresholds(ind, corpus, DEFAULT_SWEEP_ROWS);
        sweep_tables.push(sweep_single_indicator(ind, &thresholds, corpus)?);
    }

    let report = CalibrationReport {
        best,
        accepted,
        sweep_tables,
        curve: curve_for(&samples, curve_triple, spec.thresholds()),
        weight_triples: triples.len(),
        combinations: triples.len() * spec.thresholds().len(),
        stats: *stats,
    };
    if report.best.is_none() {
        return Err(CalibrationError::NoAcceptableCombo(Box::new(report)));
    }
    Ok(report)
}

/// Rows per indicator in the single-indicator tables of a report.
pub const DEFAULT_SWEEP_ROWS: usize = 11;

/// Fits stats on the whole corpus, then grid searches.
pub fn calibrate(corpus: &[LabeledSample], spec: &GridSpec) -> Result<CalibrationReport, CalibrationError> {
    class_sizes(corpus)?;
    let stats = fit_normalizer(corpus.iter().map(|s| &s.features))?;
    grid_search(corpus, &stats, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Chosen point on the training split, if any passed.
    pub best: Option<GridPoint>,
    /// Rates of that point on the held-out split.
    pub test_rates: Option<RatePair>,
}

/// Stratified k-fold: within each class the i-th sample goes to fold `i % k`.
/// Stats and parameters are fitted per training split.
pub fn cross_validate(
    corpus: &[LabeledSample],
    spec: &GridSpec,
    folds: usize,
) -> Result<Vec<FoldResult>, CalibrationError> {
    let (natural, synth) = class_sizes(corpus)?;
    if folds < 2 || folds > natural.min(synth) {
        return Err(CalibrationError::InvalidGrid(format!(
            "{folds} folds needs 2 <= k <= {} (smallest class size)",
            natural.min(synth)
        )));
    }
    let mut seen = [0usize; 2];
    let assignment: Vec<usize> = corpus
        .iter()
        .map(|s| {
            let slot = &mut seen[s.label as usize];
            let f = *slot % folds;
            *slot += 1;
            f
        })
        .collect();

    (0..folds)
        .map(|fold| {
            let (test, train): (Vec<_>, Vec<_>) = corpus.iter().zip(&assignment).partition(|(_, &f)| f == fold);
            let train: Vec<LabeledSample> = train.into_iter().map(|(s, _)| s.clone()).collect();
            let test: Vec<LabeledSample> = test.into_iter().map(|(s, _)| s.clone()).collect();
            let stats = fit_normalizer(train.iter().map(|s| &s.features))?;
            let best = match grid_search(&train, &stats, spec) {
                Ok(r) => r.best,
                Err(CalibrationError::NoAcceptableCombo(_)) => None,
                Err(e) => return Err(e),
            };
            let test_rates = best.map(|b| evaluate(&b.params, &stats, &test)).transpose()?;
            Ok(FoldResult {
                fold,
                train_size: train.len(),
                test_size: test.len(),
                best,
                test_rates,
            })
        })
        .collect()
}

fn pct(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

/// Plain-text tables: one per indicator, the accepted combinations, and the
/// rate curve against the threshold for the chosen weights.
pub fn render_report(report: &CalibrationReport, top: usize) -> String {
    let mut out = String::new();
    for table in &report.sweep_tables {
        let _ = writeln!(out, "RESULTS DECIDED BY {}", table.indicator.name().to_uppercase());
        let _ = writeln!(out, "{:>16}  {:>12}  {:>12}", "threshold", "misjudgment", "recognition");
        for row in &table.rows {
            let _ = writeln!(
                out,
                "{:>16.6e}  {:>12}  {:>12}",
                row.threshold,
                pct(row.rates.misjudgment_rate),
                pct(row.rates.recognition_rate)
            );
        }
        out.push('\n');
    }

    let _ = writeln!(
        out,
        "GRID SEARCH: {} weight triples x {} thresholds = {} combinations, {} accepted",
        report.weight_triples,
        report.combinations / report.weight_triples.max(1),
        report.combinations,
        report.accepted.len()
    );
    let header = format!(
        "{:>6}  {:>6}  {:>6}  {:>7}  {:>12}  {:>12}",
        "a", "b", "c", "V'", "misjudgment", "recognition"
    );
    let line = |p: &GridPoint| {
        format!(
            "{:>6.2}  {:>6.2}  {:>6.2}  {:>7.3}  {:>12}  {:>12}",
            p.params.a,
            p.params.b,
            p.params.c,
            p.params.v_threshold,
            pct(p.rates.misjudgment_rate),
            pct(p.rates.recognition_rate)
        )
    };
    let _ = writeln!(out, "{header}");
    for p in report.top_accepted(top) {
        let _ = writeln!(out, "{}", line(&p));
    }
    out.push('\n');
    match &report.best {
        Some(b) => {
            let _ = writeln!(out, "BEST OPERATING POINT\n{header}\n{}", line(b));
        }
        None => {
            let _ = writeln!(out, "NO ACCEPTABLE COMBINATION");
            if let Some(p) = report.operating_point() {
                let _ = writeln!(out, "closest:\n{header}\n{}", line(p));
            }
        }
    }
    out.push('\n');

    if let Some(first) = report.curve.first() {
        let _ = writeln!(
            out,
            "RATES AGAINST V' (a = {:.2}, b = {:.2}, c = {:.2})",
            first.params.a, first.params.b, first.params.c
        );
        let _ = writeln!(out, "{:>7}  {:>12}  {:>12}", "V'", "misjudgment", "recognition");
        for p in &report.curve {
            let _ = writeln!(
                out,
                "{:>7.3}  {:>12}  {:>12}",
                p.params.v_threshold,
                pct(p.rates.misjudgment_rate),
                pct(p.rates.recognition_rate)
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(e: f64, m: f64, z: f64, label: Label) -> LabeledSample {
        LabeledSample {
            features: RawFeatures {
                energy: e,
                amplitude: m,
                zero_crossings: z,
                frame_count: 1,
            },
            label,
            source_id: format!("{label}-{e}-{m}-{z}"),
        }
    }

    fn two_point() -> Vec<LabeledSample> {
        vec![
            sample(0.0, 0.0, 0.0, Label::Natural),
            sample(1.0, 1.0, 1.0, Label::Synthesized),
        ]
    }

    #[test]
    fn evaluate_extremes() {
        let corpus = two_point();
        let stats = fit_normalizer(corpus.iter().map(|s| &s.features)).unwrap();
        let never = ClassifierParams::new(0.2, 0.6, 0.2, 1.0).unwrap();
        let r = evaluate(&never, &stats, &corpus).unwrap();
        assert_eq!((r.misjudgment_rate, r.recognition_rate), (0.0, 0.0));
        let always = ClassifierParams {
            v_threshold: -0.5,
            ..never
        };
        let r = evaluate(&always, &stats, &corpus).unwrap();
        assert_eq!((r.misjudgment_rate, r.recognition_rate), (1.0, 1.0));
        let split = ClassifierParams::new(0.2, 0.6, 0.2, 0.5).unwrap();
        let r = evaluate(&split, &stats, &corpus).unwrap();
        assert_eq!((r.misjudgment_rate, r.recognition_rate), (0.0, 1.0));
    }

    #[test]
    fn evaluate_missing_class() {
        let corpus = vec![sample(0.0, 0.0, 0.0, Label::Natural)];
        let stats = fit_normalizer(corpus.iter().map(|s| &s.features)).unwrap();
        assert_eq!(
            evaluate(&ClassifierParams::default(), &stats, &corpus),
            Err(CalibrationError::MissingClass(Label::Synthesized))
        );
        let corpus = vec![sample(0.0, 0.0, 0.0, Label::Synthesized)];
        assert_eq!(
            sweep_single_indicator(Indicator::Energy, &[0.0], &corpus),
            Err(CalibrationError::MissingClass(Label::Natural))
        );
    }

    #[test]
    fn sweep_extremes_and_enumeration() {
        let corpus = vec![
            sample(1.0, 0.0, 0.0, Label::Natural),
            sample(2.0, 0.0, 0.0, Label::Natural),
            sample(5.0, 0.0, 0.0, Label::Natural),
            sample(3.0, 0.0, 0.0, Label::Synthesized),
            sample(4.0, 0.0, 0.0, Label::Synthesized),
        ];
        let t = sweep_single_indicator(Indicator::Energy, &[0.0, 1.0, 2.5, 3.5, 4.0, 9.0], &corpus).unwrap();
        let got: Vec<(f64, f64)> = t
            .rows
            .iter()
            .map(|r| (r.rates.misjudgment_rate, r.rates.recognition_rate))
            .collect();
        // hand-counted: natural values above t / 3, synthesized above t / 2
        assert_eq!(
            got,
            vec![
                (1.0, 1.0),
                (2.0 / 3.0, 1.0),
                (1.0 / 3.0, 1.0),
                (1.0 / 3.0, 0.5),
                (1.0 / 3.0, 0.0),
                (0.0, 0.0)
            ]
        );
    }

    #[test]
    fn step_half_enumerates_six_triples() {
        let spec = GridSpec::new(0.5, vec![0.5]).unwrap();
        let got: Vec<(f64, f64, f64)> = spec.triples().iter().map(|t| t.weights()).collect();
        assert_eq!(
            got,
            vec![
                (0.0, 0.0, 1.0),
                (0.0, 0.5, 0.5),
                (0.0, 1.0, 0.0),
                (0.5, 0.0, 0.5),
                (0.5, 0.5, 0.0),
                (1.0, 0.0, 0.0)
            ]
        );
    }

    #[test]
    fn triple_count_matches_binomial() {
        for (step, expect) in [(1.0, 3), (0.5, 6), (0.25, 15), (0.1, 66), (0.01, 5151)] {
            let spec = GridSpec::new(step, vec![0.0]).unwrap();
            assert_eq!(spec.triples().len(), expect, "step {step}");
            assert_eq!(simplex_size(spec.weight_divisions()), expect);
            for t in spec.triples() {
                let (a, b, c) = t.weights();
                assert!((a + b + c - 1.0).abs() < 1e-9);
                t.params(0.5).validate().unwrap();
            }
        }
    }

    #[test]
    fn float_accumulation_would_miss_triples() {
        // the lattice is exact even where naive float stepping drifts
        let mut naive = 0;
        let mut a = 0.0f64;
        while a <= 1.0 {
            let mut b = 0.0f64;
            while a + b <= 1.0 {
                naive += 1;
                b += 0.01;
            }
            a += 0.01;
        }
        assert_ne!(naive, 5151);
        assert_eq!(weight_triples(100).len(), 5151);
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::new(0.3, vec![0.0]).is_err());
        assert!(GridSpec::new(0.0, vec![0.0]).is_err());
        assert!(GridSpec::new(0.25, vec![]).is_err());
        assert!(GridSpec::new(0.25, vec![0.5, 0.5]).is_err());
        assert!(GridSpec::new(0.25, vec![0.6, 0.5]).is_err());
        assert!(GridSpec::new(0.25, vec![1.5]).is_err());
        let d = GridSpec::default();
        assert_eq!(d.weight_divisions(), 100);
        assert_eq!(d.thresholds().len(), 201);
        assert_eq!(d.thresholds()[1], 0.005);
    }

    #[test]
    fn separable_by_amplitude_reaches_perfect_split() {
        let mut corpus = Vec::new();
        for i in 0..6 {
            let x = f64::from(i);
            // energy and zcr carry no information; amplitude separates
            corpus.push(sample(7.0 - x, 10.0 + x, x, Label::Natural));
            corpus.push(sample(x, 100.0 + x, 7.0 - x, Label::Synthesized));
        }
        let report = calibrate(&corpus, &GridSpec::default()).unwrap();
        let best = report.best.unwrap();
        assert_eq!(best.rates.recognition_rate, 1.0);
        assert_eq!(best.rates.misjudgment_rate, 0.0);
        assert!(best.params.b > 0.0);
    }

    #[test]
    fn no_acceptable_combo_still_carries_report() {
        // identical feature vectors in both classes are inseparable
        let corpus = vec![
            sample(1.0, 1.0, 1.0, Label::Natural),
            sample(2.0, 2.0, 2.0, Label::Natural),
            sample(1.0, 1.0, 1.0, Label::Synthesized),
            sample(2.0, 2.0, 2.0, Label::Synthesized),
        ];
        match calibrate(&corpus, &GridSpec::new(0.25, GridSpec::uniform_thresholds(20)).unwrap()) {
            Err(CalibrationError::NoAcceptableCombo(report)) => {
                assert!(report.accepted.is_empty());
                assert_eq!(report.weight_triples, 15);
                assert_eq!(report.curve.len(), 21);
                assert!(report.operating_point().is_some());
                assert!(render_report(&report, 5).contains("NO ACCEPTABLE COMBINATION"));
            }
            other => panic!("expected NoAcceptableCombo, got {other:?}"),
        }
    }

    #[test]
    fn rates_non_increasing_in_threshold() {
        let corpus: Vec<_> = (0..20)
            .map(|i| {
                let x = f64::from((i * 37) % 11);
                let label = if i % 2 == 0 { Label::Natural } else { Label::Synthesized };
                sample(x, x * x, 10.0 - x, label)
            })
            .collect();
        let stats = fit_normalizer(corpus.iter().map(|s| &s.features)).unwrap();
        let samples: Vec<_> = corpus
            .iter()
            .map(|s| (s.label, normalize(&s.features, &stats)))
            .collect();
        for triple in weight_triples(4) {
            let curve = curve_for(&samples, triple, &GridSpec::uniform_thresholds(50));
            for w in curve.windows(2) {
                assert!(w[1].rates.misjudgment_rate <= w[0].rates.misjudgment_rate);
                assert!(w[1].rates.recognition_rate <= w[0].rates.recognition_rate);
            }
        }
    }

    #[test]
    fn cross_validation_folds() {
        let mut corpus = Vec::new();
        for i in 0..10 {
            let x = f64::from(i);
            corpus.push(sample(x, 10.0 + x, x, Label::Natural));
            corpus.push(sample(x, 100.0 + x, x, Label::Synthesized));
        }
        let spec = GridSpec::new(0.25, GridSpec::uniform_thresholds(20)).unwrap();
        let folds = cross_validate(&corpus, &spec, 5).unwrap();
        assert_eq!(folds.len(), 5);
        for f in &folds {
            assert_eq!(f.train_size, 16);
            assert_eq!(f.test_size, 4);
            assert!(f.best.is_some());
            assert!(f.test_rates.is_some());
        }
        assert!(cross_validate(&corpus, &spec, 11).is_err());
        assert!(cross_validate(&corpus, &spec, 1).is_err());
    }

    #[test]
    fn report_rendering_is_deterministic() {
        let corpus = two_point();
        let spec = GridSpec::new(0.25, GridSpec::uniform_thresholds(10)).unwrap();
        let a = render_report(&calibrate(&corpus, &spec).unwrap(), 5);
        let b = render_report(&calibrate(&corpus, &spec).unwrap(), 5);
        assert_eq!(a, b);
        assert!(a.contains("RESULTS DECIDED BY SHORT-TERM ENERGY"));
        assert!(a.contains("BEST OPERATING POINT"));
    }

    #[test]
    fn label_round_trip() {
        for l in [Label::Natural, Label::Synthesized] {
            assert_eq!(l.to_string().parse::<Label>().unwrap(), l);
        }
        assert!("human".parse::<Label>().is_err());
    }
}
