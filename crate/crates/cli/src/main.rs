//! `voxcap`: analyze recordings, calibrate models, generate fixture corpora
//! and run the challenge/verify service.
//!
//! Exit status: 0 success, 1 usage or invalid input set, 2 I/O or unreadable
//! audio, 3 no acceptable parameter combination.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use voxcap_core::calibration::{
    calibrate, cross_validate, evaluate, render_report, CalibrationError, CalibrationReport, GridPoint, GridSpec,
    Label, RatePair,
};
use voxcap_core::challenge::{Corpus, DEFAULT_TTL_SECS};
use voxcap_core::features::frame_features;
use voxcap_core::fixtures::{write_set, FixtureSpec};
use voxcap_core::manifest::{load_samples, read_manifest};
use voxcap_core::wav::{parse_wav, SUPPORTED_RATES};
use voxcap_core::{analyze_buffer, Analysis, FramingConfig, Model};
use voxcap_service::{Service, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "voxcap", version, about = "Voice liveness CAPTCHA toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print features, score and verdict for each WAV file.
    Analyze(AnalyzeArgs),
    /// Fit normalisation stats and grid-search weights over a labelled manifest.
    Calibrate(CalibrateArgs),
    /// Report misjudgment and recognition rates of a model on a manifest.
    Evaluate(EvaluateArgs),
    /// Write seeded natural-like and synthetic-like WAV corpora plus a manifest.
    GenFixtures(GenFixturesArgs),
    /// Run the HTTP challenge/verify service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    JsonLines,
}

#[derive(Debug, Args)]
struct FramingArgs {
    /// Window each half-frame with a 50-sample Hamming window (input must be 5 kHz).
    #[arg(long)]
    paper_mode: bool,
}

impl FramingArgs {
    fn config(&self) -> FramingConfig {
        if self.paper_mode {
            FramingConfig::paper_mode()
        } else {
            FramingConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// WAV files to analyze, reported in argument order.
    #[arg(required = true)]
    wavs: Vec<PathBuf>,
    /// Model file; the shipped default model if omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    framing: FramingArgs,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Also write `<name>.frames.csv` per input with per-frame features.
    #[arg(long)]
    frames_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Manifest of `<natural|synthesized>,<path>` lines.
    manifest: PathBuf,
    /// Weight grid spacing; must divide 1 evenly.
    #[arg(long, default_value_t = 0.01)]
    weight_step: f64,
    /// Threshold grid spacing over [0, 1]; must divide 1 evenly.
    #[arg(long, default_value_t = 0.005)]
    threshold_step: f64,
    /// Where to write the fitted model.
    #[arg(long, default_value = "model.toml")]
    out: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also run stratified k-fold cross-validation.
    #[arg(long)]
    folds: Option<usize>,
    /// Accepted combinations listed in the text report.
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[command(flatten)]
    framing: FramingArgs,
    /// `text` prints the report; `csv` and `json-lines` list every accepted combination.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    manifest: PathBuf,
    /// Model file; the shipped default model if omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    framing: FramingArgs,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct GenFixturesArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    natural: usize,
    #[arg(long, default_value_t = 50)]
    synthetic: usize,
    #[arg(long, default_value_t = 16000)]
    rate: u32,
    #[arg(long, default_value = "fixtures")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "VOXCAP_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Text documents to draw sentences from; repeatable. Bundled corpus if omitted.
    #[arg(long, env = "VOXCAP_CORPUS", value_delimiter = ',')]
    corpus: Vec<PathBuf>,
    /// Model file; the shipped default model if omitted.
    #[arg(long, env = "VOXCAP_MODEL")]
    model: Option<PathBuf>,
    #[arg(long, env = "VOXCAP_TTL_SECS", default_value_t = DEFAULT_TTL_SECS)]
    ttl_secs: u64,
    /// Shortest accepted recording in seconds.
    #[arg(long, env = "VOXCAP_MIN_DURATION", default_value_t = 1.0)]
    min_duration: f64,
    /// Longest accepted recording in seconds.
    #[arg(long, env = "VOXCAP_MAX_DURATION", default_value_t = 30.0)]
    max_duration: f64,
    /// Seed for sentence selection.
    #[arg(long, env = "VOXCAP_SEED")]
    seed: Option<u64>,
    #[command(flatten)]
    framing: FramingArgs,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    NoAcceptableCombo,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::NoAcceptableCombo => 3,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn io_err(context: impl std::fmt::Display) -> impl FnOnce(io::Error) -> CliError {
    move |e| CliError::Io(format!("{context}: {e}"))
}

fn load_model(path: Option<&Path>) -> CliResult<Model> {
    match path {
        None => Ok(Model::shipped_default()),
        Some(p) => Model::load(p).map_err(|e| CliError::Io(format!("model {}: {e}", p.display()))),
    }
}

fn calibration_err(e: CalibrationError) -> CliError {
    match e {
        CalibrationError::NoAcceptableCombo(_) => CliError::NoAcceptableCombo,
        other => CliError::Usage(other.to_string()),
    }
}

fn uniform_grid(step: f64) -> CliResult<Vec<f64>> {
    let n = (1.0 / step).round();
    if !(step > 0.0 && step <= 1.0) || n > 10_000.0 || (n * step - 1.0).abs() > 1e-9 {
        return Err(CliError::Usage(format!(
            "threshold step {step} must divide 1 into at most 10000 equal parts"
        )));
    }
    Ok(GridSpec::uniform_thresholds(n as u32))
}

#[derive(Serialize)]
struct AnalyzeRecord<'a> {
    path: &'a str,
    sample_rate: u32,
    #[serde(flatten)]
    analysis: &'a Analysis,
    v_threshold: f64,
}

fn frames_file_name(input: &Path, used: &mut HashSet<String>) -> String {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into());
    let mut name = format!("{stem}.frames.csv");
    let mut n = 1;
    while !used.insert(name.clone()) {
        n += 1;
        name = format!("{stem}-{n}.frames.csv");
    }
    name
}

fn cmd_analyze(args: AnalyzeArgs, out: &mut impl Write) -> CliResult {
    let model = load_model(args.model.as_deref())?;
    let config = args.framing.config();
    if let Some(dir) = &args.frames_dir {
        std::fs::create_dir_all(dir).map_err(io_err(dir.display()))?;
    }
    let mut used_names = HashSet::new();
    if args.format == Format::Csv {
        writeln!(out, "path,duration_secs,frame_count,E0,M0,Z0,E,M,Z,V,verdict").map_err(io_err("stdout"))?;
    }
    for (i, path) in args.wavs.iter().enumerate() {
        let shown = path.display().to_string();
        let bytes = std::fs::read(path).map_err(io_err(&shown))?;
        let buffer = parse_wav(&bytes).map_err(|e| CliError::Io(format!("{shown}: {e}")))?;
        let a = analyze_buffer(&buffer, &config, &model).map_err(|e| CliError::Io(format!("{shown}: {e}")))?;
        let (raw, d) = (a.raw, a.decision);
        let block = match args.format {
            Format::Text => {
                let mut s = String::new();
                if i > 0 {
                    s.push('\n');
                }
                let _ = writeln!(s, "== {shown} ==");
                let _ = writeln!(
                    s,
                    "duration  {:.3} s  ({} Hz, {} frames)",
                    a.duration_secs,
                    buffer.sample_rate(),
                    raw.frame_count
                );
                let _ = writeln!(s, "E0 {}  E {}", raw.energy, d.features.energy);
                let _ = writeln!(s, "M0 {}  M {}", raw.amplitude, d.features.amplitude);
                let _ = writeln!(s, "Z0 {}  Z {}", raw.zero_crossings, d.features.zero_crossings);
                let _ = writeln!(s, "V  {}  (V' = {})", d.score, model.params.v_threshold);
                let _ = writeln!(s, "verdict {}", d.verdict);
                s
            }
            Format::Csv => format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                csv_field(&shown),
                a.duration_secs,
                raw.frame_count,
                raw.energy,
                raw.amplitude,
                raw.zero_crossings,
                d.features.energy,
                d.features.amplitude,
                d.features.zero_crossings,
                d.score,
                d.verdict
            ),
            Format::JsonLines => {
                let rec = AnalyzeRecord {
                    path: &shown,
                    sample_rate: buffer.sample_rate(),
                    analysis: &a,
                    v_threshold: model.params.v_threshold,
                };
                serde_json::to_string(&rec).expect("serializable") + "\n"
            }
        };
        out.write_all(block.as_bytes()).map_err(io_err("stdout"))?;

        if let Some(dir) = &args.frames_dir {
            let frames = frame_features(&buffer, &config).map_err(|e| CliError::Io(format!("{shown}: {e}")))?;
            let mut csv = String::from("frame_index,energy,amplitude,zcr\n");
            for (k, f) in frames.iter().enumerate() {
                let _ = writeln!(csv, "{k},{},{},{}", f.energy, f.amplitude, f.zero_crossings);
            }
            let target = dir.join(frames_file_name(path, &mut used_names));
            std::fs::write(&target, csv).map_err(io_err(target.display()))?;
        }
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn load_corpus(manifest: &Path, config: &FramingConfig) -> CliResult<Vec<voxcap_core::calibration::LabeledSample>> {
    use voxcap_core::manifest::ManifestError;
    let entries = read_manifest(manifest).map_err(|e| match e {
        ManifestError::Syntax { .. } => CliError::Usage(format!("{}: {e}", manifest.display())),
        other => CliError::Io(other.to_string()),
    })?;
    load_samples(&entries, config).map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Serialize)]
struct PointRecord {
    a: f64,
    b: f64,
    c: f64,
    v_threshold: f64,
    misjudgment_rate: f64,
    recognition_rate: f64,
}

impl From<&GridPoint> for PointRecord {
    fn from(p: &GridPoint) -> Self {
        Self {
            a: p.params.a,
            b: p.params.b,
            c: p.params.c,
            v_threshold: p.params.v_threshold,
            misjudgment_rate: p.rates.misjudgment_rate,
            recognition_rate: p.rates.recognition_rate,
        }
    }
}

fn machine_listing(report: &CalibrationReport, format: Format) -> String {
    let mut s = String::new();
    if format == Format::Csv {
        s.push_str("a,b,c,v_threshold,misjudgment_rate,recognition_rate\n");
    }
    for p in &report.accepted {
        let r = PointRecord::from(p);
        match format {
            Format::Csv => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    r.a, r.b, r.c, r.v_threshold, r.misjudgment_rate, r.recognition_rate
                );
            }
            _ => {
                s.push_str(&serde_json::to_string(&r).expect("serializable"));
                s.push('\n');
            }
        }
    }
    s
}

fn cmd_calibrate(args: CalibrateArgs, out: &mut impl Write) -> CliResult {
    let thresholds = uniform_grid(args.threshold_step)?;
    let spec = GridSpec::new(args.weight_step, thresholds).map_err(calibration_err)?;
    let config = args.framing.config();
    let corpus = load_corpus(&args.manifest, &config)?;

    let (report, outcome) = match calibrate(&corpus, &spec) {
        Ok(r) => (r, Ok(())),
        Err(CalibrationError::NoAcceptableCombo(r)) => (*r, Err(CliError::NoAcceptableCombo)),
        Err(e) => return Err(calibration_err(e)),
    };

    let mut text = match args.format {
        Format::Text => render_report(&report, args.top),
        f => machine_listing(&report, f),
    };
    if let Some(k) = args.folds {
        let folds = cross_validate(&corpus, &spec, k).map_err(calibration_err)?;
        if args.format == Format::Text {
            let _ = writeln!(text, "\nCROSS-VALIDATION ({k} folds)");
            let _ = writeln!(
                text,
                "{:>4}  {:>5}  {:>5}  {:>12}  {:>12}",
                "fold", "train", "test", "misjudgment", "recognition"
            );
            for f in &folds {
                let (m, r) = f
                    .test_rates
                    .map(|t| {
                        (
                            format!("{:.1}%", t.misjudgment_rate * 100.0),
                            format!("{:.1}%", t.recognition_rate * 100.0),
                        )
                    })
                    .unwrap_or_else(|| ("-".into(), "-".into()));
                let _ = writeln!(
                    text,
                    "{:>4}  {:>5}  {:>5}  {m:>12}  {r:>12}",
                    f.fold, f.train_size, f.test_size
                );
            }
        } else {
            for f in &folds {
                eprintln!(
                    "fold {}: test rates {}",
                    f.fold,
                    f.test_rates.map(|t| format!("{t:?}")).unwrap_or_else(|| "none".into())
                );
            }
        }
    }

    match &args.report {
        Some(p) => std::fs::write(p, &text).map_err(io_err(p.display()))?,
        None => out.write_all(text.as_bytes()).map_err(io_err("stdout"))?,
    }
    outcome?;

    let best = report.best.expect("accepted report has a best point");
    let model = Model::new(report.stats, best.params).map_err(|e| CliError::Usage(e.to_string()))?;
    model
        .save(&args.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    eprintln!(
        "wrote {} (a = {}, b = {}, c = {}, V' = {}; misjudgment {:.1}%, recognition {:.1}%)",
        args.out.display(),
        best.params.a,
        best.params.b,
        best.params.c,
        best.params.v_threshold,
        best.rates.misjudgment_rate * 100.0,
        best.rates.recognition_rate * 100.0
    );
    Ok(())
}

#[derive(Serialize)]
struct EvaluateRecord {
    natural: usize,
    synthesized: usize,
    #[serde(flatten)]
    rates: RatePair,
}

fn cmd_evaluate(args: EvaluateArgs, out: &mut impl Write) -> CliResult {
    let model = load_model(args.model.as_deref())?;
    let corpus = load_corpus(&args.manifest, &args.framing.config())?;
    let rates = evaluate(&model.params, &model.stats, &corpus).map_err(calibration_err)?;
    let count = |l: Label| corpus.iter().filter(|s| s.label == l).count();
    let rec = EvaluateRecord {
        natural: count(Label::Natural),
        synthesized: count(Label::Synthesized),
        rates,
    };
    let text = match args.format {
        Format::Text => format!(
            "natural {}  synthesized {}\nmisjudgment {:.1}%  recognition {:.1}%\n",
            rec.natural,
            rec.synthesized,
            rates.misjudgment_rate * 100.0,
            rates.recognition_rate * 100.0
        ),
        Format::Csv => format!(
            "natural,synthesized,misjudgment_rate,recognition_rate\n{},{},{},{}\n",
            rec.natural, rec.synthesized, rates.misjudgment_rate, rates.recognition_rate
        ),
        Format::JsonLines => serde_json::to_string(&rec).expect("serializable") + "\n",
    };
    out.write_all(text.as_bytes()).map_err(io_err("stdout"))
}

fn cmd_gen_fixtures(args: GenFixturesArgs, out: &mut impl Write) -> CliResult {
    if !SUPPORTED_RATES.contains(&args.rate) {
        return Err(CliError::Usage(format!(
            "unsupported rate {} Hz; use one of {SUPPORTED_RATES:?}",
            args.rate
        )));
    }
    let spec = FixtureSpec {
        seed: args.seed,
        natural: args.natural,
        synthesized: args.synthetic,
        sample_rate: args.rate,
    };
    let manifest = write_set(&spec, &args.out).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out, "{}", manifest.display()).map_err(io_err("stdout"))
}

fn cmd_serve(args: ServeArgs, out: &mut impl Write) -> CliResult {
    if !(args.min_duration.is_finite() && args.min_duration >= 0.0) {
        return Err(CliError::Usage(format!(
            "--min-duration {} must be non-negative",
            args.min_duration
        )));
    }
    if !(args.max_duration.is_finite() && args.max_duration > args.min_duration) {
        return Err(CliError::Usage(format!(
            "--max-duration {} must exceed --min-duration {}",
            args.max_duration, args.min_duration
        )));
    }
    if args.ttl_secs == 0 {
        return Err(CliError::Usage("--ttl-secs must be positive".into()));
    }
    let framing = args.framing.config();
    framing.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let model = load_model(args.model.as_deref())?;
    let corpus = if args.corpus.is_empty() {
        Corpus::bundled()
    } else {
        Corpus::from_paths(&args.corpus).map_err(|e| CliError::Io(e.to_string()))?
    };
    let config = ServiceConfig {
        ttl_secs: args.ttl_secs,
        min_duration_secs: args.min_duration,
        max_duration_secs: args.max_duration,
        framing,
        seed: args.seed,
        ..Default::default()
    };
    let service = Arc::new(Service::new(corpus, model, config));

    let _ = tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .try_init();

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(io_err("runtime"))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.listen)
            .await
            .map_err(io_err(format!("bind {}", args.listen)))?;
        let addr = listener.local_addr().map_err(io_err("local address"))?;
        // handlers must be in place before anyone learns the address
        let shutdown = shutdown_signal().map_err(io_err("signal handler"))?;
        writeln!(out, "voxcap listening on http://{addr}").map_err(io_err("stdout"))?;
        out.flush().map_err(io_err("stdout"))?;
        voxcap_service::serve(listener, service, shutdown)
            .await
            .map_err(io_err("server"))
    })
}

#[cfg(unix)]
fn shutdown_signal() -> io::Result<impl std::future::Future<Output = ()> + Send + 'static> {
    use tokio::signal::unix::{signal, SignalKind};
    let mut interrupt = signal(SignalKind::interrupt())?;
    let mut terminate = signal(SignalKind::terminate())?;
    Ok(async move {
        tokio::select! {
            _ = interrupt.recv() => {}
            _ = terminate.recv() => {}
        }
    })
}

#[cfg(not(unix))]
fn shutdown_signal() -> io::Result<impl std::future::Future<Output = ()> + Send + 'static> {
    Ok(async {
        let _ = tokio::signal::ctrl_c().await;
    })
}

fn run(cli: Cli) -> CliResult {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Analyze(a) => cmd_analyze(a, &mut out),
        Command::Calibrate(a) => cmd_calibrate(a, &mut out),
        Command::Evaluate(a) => cmd_evaluate(a, &mut out),
        Command::GenFixtures(a) => cmd_gen_fixtures(a, &mut out),
        Command::Serve(a) => {
            drop(out);
            cmd_serve(a, &mut io::stdout())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) | CliError::Io(m) => eprintln!("error: {m}"),
                CliError::NoAcceptableCombo => {
                    eprintln!("error: no weight/threshold combination has misjudgment < 10% and recognition > 90%")
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
