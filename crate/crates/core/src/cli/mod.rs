//! The `sa` command line.
//!
//! Exit codes: 0 success (including a tag scan that finds nothing), 1 domain
//! or I/O failure, 2 usage error. Data goes to files or stdout; diagnostics
//! go to stderr, with verbosity from `SA_LOG` (error|warn|info|debug).

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::{
    save_model, train, ClassLabel, Classifier, HierarchicalClassifier, LinearModel, ModelClass,
    ScoredRecord, TrainConfig, DEFAULT_SCREEN_THRESHOLD,
};
use crate::eval::{
    accuracy_from_published, balanced_subsample, extract_manifest, run_experiment, synth_generate,
    tag_scan_rates, ExperimentKind, ExperimentSpec, Manifest, ManifestRow, SynthConfig,
};
use crate::features::{extract, FeatureConfig};
use crate::imaging::{load_image, preprocess, save_image, ImageFormat};
use crate::policy::{curate, parse_policy, write_decisions, AttributeSource, ImageAttributes};
use crate::screentag::{
    encode_tag, overlay, payload_encode, scan, AppRegistry, Corner, FileStateProvider,
    OverlayPlacement, PayloadError, Poller, ScanError, SystemClock, TagError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "sa",
    version,
    about = "Screen detection, ScreenTag markers and curation policies for lifelog images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resize so the short axis is 256 px and center-crop to 256×256.
    Preprocess(PreprocessArgs),
    /// Render a seeded synthetic dataset and its manifest.
    Synth(SynthArgs),
    /// Write feature vectors as CSV plus a JSON layout sidecar.
    ExtractFeatures(ExtractArgs),
    /// Train a model from a labeled manifest.
    Train(TrainArgs),
    /// Score images with a flat or hierarchical model.
    Classify(ClassifyArgs),
    /// Check the published tables or run an experiment.
    Eval(EvalArgs),
    /// Apply a curation policy to classifier scores.
    Curate(CurateArgs),
    /// ScreenTag encoding, scanning and polling.
    #[command(subcommand)]
    Tag(TagCommand),
}

#[derive(Args, Debug)]
struct Jobs {
    /// Worker threads for per-image work (output order never depends on it).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// Image file or directory of images.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output file (for a file input) or directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// JSON generator config; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides every per-class count.
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Image file, directory or `path,label` manifest.
    #[arg(long = "in")]
    input: PathBuf,
    /// Feature CSV; the layout goes to `<out>.layout.json`.
    #[arg(long)]
    out: PathBuf,
    /// JSON feature config; defaults when absent.
    #[arg(long)]
    feature_config: Option<PathBuf>,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TrainMode {
    /// noscreen vs. screen
    Screen,
    /// the four screen applications
    App4,
    /// all five labels
    Flat5,
    /// screen gate plus app4, saved together
    Hier,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_enum)]
    mode: TrainMode,
    /// `path,label` manifest of training images.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Subsample each model class to the size of the smallest.
    #[arg(long)]
    balance: bool,
    /// Screen threshold stored in a hierarchical model.
    #[arg(long, default_value_t = DEFAULT_SCREEN_THRESHOLD)]
    threshold: f64,
    #[command(flatten)]
    hyper: Hyper,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Args, Debug)]
struct Hyper {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
}

impl Hyper {
    fn apply(&self, mut config: TrainConfig) -> TrainConfig {
        config.epochs = self.epochs.unwrap_or(config.epochs);
        config.learning_rate = self.learning_rate.unwrap_or(config.learning_rate);
        config.l2 = self.l2.unwrap_or(config.l2);
        config.batch_size = self.batch_size.unwrap_or(config.batch_size);
        config
    }
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// Flat 5-way or hierarchical model file.
    #[arg(long)]
    model: PathBuf,
    /// Image file, directory or manifest.
    #[arg(long = "in")]
    input: PathBuf,
    /// Screen threshold; defaults to the model's (0.5 for flat models).
    #[arg(long)]
    threshold: Option<f64>,
    /// Scores CSV (`path,p_noscreen,...`); labels always go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("what").required(true).args(["published_check", "experiment"])))]
struct EvalArgs {
    /// Recompute accuracy and baseline of the six published tables.
    #[arg(long)]
    published_check: bool,
    /// screen-balanced, screen-shifted, app4 or flat5.
    #[arg(long, requires_all = ["train", "test", "out_dir"])]
    experiment: Option<ExperimentKind>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Receives `<kind>.json` and `<kind>_pr.csv`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SCREEN_THRESHOLD)]
    threshold: f64,
    #[command(flatten)]
    hyper: Hyper,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SourceArg {
    Classifier,
    External,
}

#[derive(Args, Debug)]
struct CurateArgs {
    #[arg(long)]
    policy: PathBuf,
    /// Scores CSV from `sa classify` or an external classifier.
    #[arg(long)]
    scores: PathBuf,
    /// Directory of `tag scan --json` outputs named `<image stem>.json`.
    #[arg(long)]
    tags: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SCREEN_THRESHOLD)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = SourceArg::Classifier)]
    source: SourceArg,
    /// Decisions CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum TagCommand {
    /// Render the tag for an active subset of the registry.
    Encode(TagEncodeArgs),
    /// Find and decode a tag in a photo.
    Scan(TagScanArgs),
    /// Re-encode the tag from an app-state file at a fixed period.
    Poll(TagPollArgs),
}

#[derive(Args, Debug)]
struct TagEncodeArgs {
    /// Comma-separated app registry, in bit order.
    #[arg(long)]
    apps: String,
    /// Comma-separated active apps.
    #[arg(long, default_value = "")]
    active: String,
    #[arg(long, default_value_t = 4)]
    module_px: u32,
    #[arg(long)]
    out: PathBuf,
    /// Composite the tag onto this screen image instead of writing it alone.
    #[arg(long)]
    overlay: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CornerArg::UpperLeft)]
    corner: CornerArg,
    #[arg(long, default_value_t = 8)]
    margin: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CornerArg {
    UpperLeft,
    UpperRight,
    LowerLeft,
    LowerRight,
}

impl From<CornerArg> for Corner {
    fn from(c: CornerArg) -> Self {
        match c {
            CornerArg::UpperLeft => Corner::UpperLeft,
            CornerArg::UpperRight => Corner::UpperRight,
            CornerArg::LowerLeft => Corner::LowerLeft,
            CornerArg::LowerRight => Corner::LowerRight,
        }
    }
}

#[derive(Args, Debug)]
struct TagScanArgs {
    /// Photo, or a directory of photos (then `--out-dir` is required).
    #[arg(long = "in")]
    input: PathBuf,
    /// Registry used to name active apps.
    #[arg(long)]
    registry: String,
    /// Print the JSON result instead of a text line.
    #[arg(long)]
    json: bool,
    /// Write one `<stem>.json` per photo here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Args, Debug)]
struct TagPollArgs {
    /// One active app per line; re-read when it changes.
    #[arg(long)]
    state_file: PathBuf,
    /// Comma-separated app registry.
    #[arg(long)]
    apps: String,
    /// Seconds between snapshots.
    #[arg(long, default_value_t = 1.0)]
    period: f64,
    /// Receives `tag_<index>.ppm` per snapshot.
    #[arg(long)]
    out_dir: PathBuf,
    /// Stop after this many snapshots; unbounded when absent.
    #[arg(long)]
    count: Option<u64>,
    #[arg(long, default_value_t = 4)]
    module_px: u32,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn fail(e: impl fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("SA_LOG", "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Failure(m)) => {
            eprintln!("error: {m}");
            EXIT_FAILURE
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Preprocess(a) => with_jobs(a.jobs.jobs, || cmd_preprocess(&a)),
        Command::Synth(a) => cmd_synth(&a),
        Command::ExtractFeatures(a) => with_jobs(a.jobs.jobs, || cmd_extract(&a)),
        Command::Train(a) => with_jobs(a.jobs.jobs, || cmd_train(&a)),
        Command::Classify(a) => with_jobs(a.jobs.jobs, || cmd_classify(&a)),
        Command::Eval(a) => with_jobs(a.jobs.jobs, || cmd_eval(&a)),
        Command::Curate(a) => cmd_curate(&a),
        Command::Tag(TagCommand::Encode(a)) => cmd_tag_encode(&a),
        Command::Tag(TagCommand::Scan(a)) => with_jobs(a.jobs.jobs, || cmd_tag_scan(&a)),
        Command::Tag(TagCommand::Poll(a)) => cmd_tag_poll(&a),
    }
}

fn with_jobs(jobs: usize, f: impl FnOnce() -> CliResult + Send) -> CliResult {
    if jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(fail)?
        .install(f)
}

fn is_image(path: &Path) -> bool {
    ImageFormat::from_path(path).is_some()
}

/// A single image, every image in a directory (sorted by name), or the rows
/// of a manifest CSV. Labels are present only for manifests.
fn collect_inputs(input: &Path) -> CliResult<Vec<(PathBuf, Option<ClassLabel>)>> {
    if input.is_dir() {
        let mut paths: Vec<PathBuf> = fs::read_dir(input)
            .map_err(|e| fail(format!("{}: {e}", input.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_image(p))
            .collect();
        paths.sort();
        return Ok(paths.into_iter().map(|p| (p, None)).collect());
    }
    if input
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        let m = Manifest::read(input).map_err(fail)?;
        return Ok(m
            .rows
            .into_iter()
            .map(|r| (r.path, Some(r.label)))
            .collect());
    }
    if !input.exists() {
        return Err(fail(format!("file not found: {}", input.display())));
    }
    Ok(vec![(input.to_path_buf(), None)])
}

fn file_name(path: &Path) -> CliResult<&std::ffi::OsStr> {
    path.file_name()
        .ok_or_else(|| usage(format!("{} has no file name", path.display())))
}

fn cmd_preprocess(a: &PreprocessArgs) -> CliResult {
    let pairs: Vec<(PathBuf, PathBuf)> = if a.input.is_dir() {
        fs::create_dir_all(&a.out).map_err(fail)?;
        collect_inputs(&a.input)?
            .into_iter()
            .map(|(p, _)| Ok((a.out.join(file_name(&p)?), p)))
            .collect::<CliResult<_>>()?
    } else {
        vec![(a.out.clone(), a.input.clone())]
    };
    pairs
        .par_iter()
        .map(|(out, input)| {
            let img = load_image(input).map_err(fail)?;
            save_image(&preprocess(&img), out).map_err(fail)
        })
        .collect::<CliResult<Vec<()>>>()?;
    log::info!("preprocessed {} images", pairs.len());
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_synth(a: &SynthArgs) -> CliResult {
    let mut config: SynthConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SynthConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(n) = a.per_class {
        config = config.with_counts(&ClassLabel::ALL.map(|l| (l, n)));
    }
    config.validate().map_err(usage)?;
    let m = synth_generate(&config, &a.out_dir).map_err(fail)?;
    log::info!("wrote {} images to {}", m.len(), a.out_dir.display());
    Ok(())
}

fn feature_config(path: Option<&Path>) -> CliResult<FeatureConfig> {
    let config: FeatureConfig = match path {
        Some(p) => read_json(p)?,
        None => FeatureConfig::default(),
    };
    config.validate().map_err(usage)?;
    Ok(config)
}

#[derive(Serialize)]
struct LayoutSidecar<'a> {
    feature_config: &'a FeatureConfig,
    dimension: usize,
    segments: Vec<crate::features::Segment>,
}

fn cmd_extract(a: &ExtractArgs) -> CliResult {
    let config = feature_config(a.feature_config.as_deref())?;
    let inputs = collect_inputs(&a.input)?;
    let vectors = inputs
        .par_iter()
        .map(|(p, _)| {
            let img = preprocess(&load_image(p).map_err(fail)?);
            extract(&img, &config).map_err(fail)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let file = fs::File::create(&a.out).map_err(fail)?;
    let mut w = csv::Writer::from_writer(io::BufWriter::new(file));
    let mut header = vec!["path".to_string()];
    header.extend((0..config.dimension()).map(|i| format!("f{i}")));
    w.write_record(&header).map_err(fail)?;
    for ((p, _), fv) in inputs.iter().zip(&vectors) {
        let mut row = vec![p.display().to_string()];
        row.extend(fv.values.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(fail)?;
    }
    w.flush().map_err(fail)?;
    let mut sidecar = a.out.as_os_str().to_owned();
    sidecar.push(".layout.json");
    let layout = LayoutSidecar {
        feature_config: &config,
        dimension: config.dimension(),
        segments: config.layout(),
    };
    fs::write(&sidecar, serde_json::to_vec_pretty(&layout).map_err(fail)?).map_err(fail)?;
    Ok(())
}

fn labeled_manifest(path: &Path) -> CliResult<Manifest> {
    Manifest::read(path).map_err(fail)
}

fn mode_classes(mode: TrainMode) -> Vec<ModelClass> {
    match mode {
        TrainMode::Screen | TrainMode::Hier => vec![ModelClass::NoScreen, ModelClass::Screen],
        TrainMode::App4 => ClassLabel::SCREEN.map(ModelClass::from).to_vec(),
        TrainMode::Flat5 => ClassLabel::ALL.map(ModelClass::from).to_vec(),
    }
}

fn train_on(
    manifest: &Manifest,
    classes: &[ModelClass],
    balance: bool,
    config: &TrainConfig,
    seed: u64,
) -> CliResult<LinearModel> {
    let rows: Vec<ManifestRow> = manifest
        .rows
        .iter()
        .filter(|r| classes.iter().any(|c| c.covers(r.label)))
        .cloned()
        .collect();
    let mut subset = Manifest::new(rows, None).map_err(fail)?;
    if balance {
        subset = balanced_subsample(&subset, classes, seed).map_err(fail)?;
    }
    let data = extract_manifest(&subset, &config.feature_config).map_err(fail)?;
    let examples: Vec<_> = data.iter().map(|d| (&d.features, d.label)).collect();
    log::info!(
        "training {} classes on {} images",
        classes.len(),
        examples.len()
    );
    train(&examples, classes, config, seed).map_err(fail)
}

fn cmd_train(a: &TrainArgs) -> CliResult {
    let manifest = labeled_manifest(&a.manifest)?;
    let config = a.hyper.apply(TrainConfig::default());
    match a.mode {
        TrainMode::Hier => {
            let screen = train_on(
                &manifest,
                &mode_classes(TrainMode::Screen),
                a.balance,
                &config,
                a.seed,
            )?;
            let apps = train_on(
                &manifest,
                &mode_classes(TrainMode::App4),
                a.balance,
                &config,
                a.seed,
            )?;
            let h = HierarchicalClassifier::new(screen, apps, a.threshold).map_err(usage)?;
            h.save(&a.out).map_err(fail)
        }
        mode => {
            let model = train_on(&manifest, &mode_classes(mode), a.balance, &config, a.seed)?;
            save_model(&model, &a.out).map_err(fail)
        }
    }
}

fn cmd_classify(a: &ClassifyArgs) -> CliResult {
    let model = Classifier::load(&a.model).map_err(fail)?;
    let threshold = match (&model, a.threshold) {
        (_, Some(t)) => t,
        (Classifier::Hierarchical(h), None) => h.screen_threshold,
        (Classifier::Flat(_), None) => DEFAULT_SCREEN_THRESHOLD,
    };
    if !(0.0..=1.0).contains(&threshold) {
        return Err(usage(format!("--threshold {threshold} outside [0, 1]")));
    }
    let inputs = collect_inputs(&a.input)?;
    let fc = *model.feature_config();
    let records = inputs
        .par_iter()
        .map(|(p, _)| {
            let fv = extract(&preprocess(&load_image(p).map_err(fail)?), &fc).map_err(fail)?;
            let probs = model.label_probabilities(&fv).map_err(fail)?;
            Ok(ScoredRecord {
                path: p.display().to_string(),
                probs,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    if let Some(out) = &a.out {
        let file = fs::File::create(out).map_err(fail)?;
        crate::classifier::write_scores(&records, file).map_err(fail)?;
    }
    let stdout = io::stdout();
    let mut w = csv::Writer::from_writer(stdout.lock());
    w.write_record(["path", "label", "confidence"])
        .map_err(fail)?;
    for r in &records {
        let (label, confidence) = r.decide(threshold);
        w.write_record([r.path.as_str(), label.as_str(), &confidence.to_string()])
            .map_err(fail)?;
    }
    w.flush().map_err(fail)
}

fn cmd_eval(a: &EvalArgs) -> CliResult {
    if a.published_check {
        let checks = accuracy_from_published();
        let rates = tag_scan_rates();
        let out = serde_json::json!({ "tables": checks, "tag_scan": rates });
        println!("{}", serde_json::to_string_pretty(&out).map_err(fail)?);
        for c in &checks {
            eprintln!(
                "{:8} acc {:.4} (printed {:.3})  baseline {:.4} (printed {:.3})  {}",
                c.experiment,
                c.accuracy,
                c.published_accuracy,
                c.baseline,
                c.published_baseline,
                if c.matches { "ok" } else { "MISMATCH" }
            );
        }
        if !checks.iter().all(|c| c.matches) {
            return Err(fail("published tables do not reproduce"));
        }
    }
    if let Some(kind) = a.experiment {
        let (Some(train_path), Some(test_path), Some(out_dir)) = (&a.train, &a.test, &a.out_dir)
        else {
            return Err(usage("--experiment needs --train, --test and --out-dir"));
        };
        let spec = ExperimentSpec {
            kind,
            threshold: a.threshold,
            seed: a.seed,
            train: a.hyper.apply(TrainConfig::default()),
        };
        let report = run_experiment(
            &spec,
            &labeled_manifest(train_path)?,
            &labeled_manifest(test_path)?,
            out_dir,
        )
        .map_err(fail)?;
        println!(
            "{}",
            serde_json::json!({
                "kind": kind,
                "accuracy": report.accuracy,
                "baseline": report.baseline,
                "report": out_dir.join(format!("{kind}.json")),
            })
        );
    }
    Ok(())
}

/// The subset of `tag scan --json` output curation reads.
#[derive(serde::Deserialize)]
struct TagJson {
    found: bool,
    #[serde(default)]
    active: Vec<String>,
}

fn cmd_curate(a: &CurateArgs) -> CliResult {
    let text =
        fs::read_to_string(&a.policy).map_err(|e| fail(format!("{}: {e}", a.policy.display())))?;
    let policy = parse_policy(&text).map_err(fail)?;
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(usage(format!("--threshold {} outside [0, 1]", a.threshold)));
    }
    let scores = crate::classifier::ingest_external_scores(&a.scores).map_err(fail)?;
    let source = match a.source {
        SourceArg::Classifier => AttributeSource::Classifier,
        SourceArg::External => AttributeSource::External,
    };
    let mut records = Vec::with_capacity(scores.len());
    for s in &scores {
        let mut attrs = ImageAttributes::from_scores(s, a.threshold, source);
        if let Some(dir) = &a.tags {
            let stem = Path::new(&s.path).file_stem().unwrap_or_default();
            let tag_path = dir.join(stem).with_extension("json");
            if tag_path.exists() {
                let tag: TagJson = read_json(&tag_path)?;
                if tag.found {
                    attrs = attrs.with_tag(&tag.active);
                }
            }
        }
        records.push(attrs);
    }
    let report = curate(&policy, &records).map_err(fail)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    log::info!(
        "deny fractions share {:.3} upload {:.3} retain {:.3}",
        report.stats.deny_fraction[0],
        report.stats.deny_fraction[1],
        report.stats.deny_fraction[2]
    );
    match &a.out {
        Some(p) => {
            write_decisions(&report.decisions, fs::File::create(p).map_err(fail)?).map_err(fail)
        }
        None => write_decisions(&report.decisions, io::stdout().lock()).map_err(fail),
    }
}

fn registry(list: &str) -> CliResult<AppRegistry> {
    AppRegistry::parse_list(list).map_err(usage)
}

fn split_list(list: &str) -> Vec<String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn cmd_tag_encode(a: &TagEncodeArgs) -> CliResult {
    let reg = registry(&a.apps)?;
    let active = split_list(&a.active);
    if a.module_px == 0 {
        return Err(usage("--module-px must be at least 1"));
    }
    let tag_err = |e: TagError| match e {
        TagError::Payload(p @ PayloadError::UnknownApp(_)) => usage(format!("--active: {p}")),
        other => fail(other),
    };
    let tag = encode_tag(&reg, &active, a.module_px).map_err(tag_err)?;
    let image = match &a.overlay {
        None => tag,
        Some(screen_path) => {
            let screen = load_image(screen_path).map_err(fail)?;
            let placement = OverlayPlacement {
                corner: a.corner.into(),
                ..OverlayPlacement::for_tag(&tag, a.margin)
            };
            let (composite, coverage) = overlay(&screen, &tag, &placement).map_err(tag_err)?;
            log::info!("tag covers {:.2}% of the screen", coverage * 100.0);
            composite
        }
    };
    save_image(&image, &a.out).map_err(fail)
}

/// `tag scan --json` output.
#[derive(Serialize, Debug, PartialEq)]
struct ScanJson {
    found: bool,
    app_count: Option<usize>,
    active: Vec<String>,
    raw_hex: Option<String>,
}

fn scan_one(path: &Path, reg: &AppRegistry) -> CliResult<ScanJson> {
    let photo = load_image(path).map_err(fail)?;
    Ok(match scan(&photo) {
        Ok(r) => {
            if r.payload.app_count != reg.len() {
                log::warn!(
                    "{}: tag lists {} apps, registry has {}",
                    path.display(),
                    r.payload.app_count,
                    reg.len()
                );
            }
            ScanJson {
                found: true,
                app_count: Some(r.payload.app_count),
                active: r.payload.active_names(reg),
                raw_hex: Some(r.raw.iter().map(|b| format!("{b:02x}")).collect()),
            }
        }
        Err(e) => {
            if let ScanError::DecodeFailed(m) = &e {
                log::info!("{}: {m}", path.display());
            }
            ScanJson {
                found: false,
                app_count: None,
                active: Vec::new(),
                raw_hex: None,
            }
        }
    })
}

fn cmd_tag_scan(a: &TagScanArgs) -> CliResult {
    let reg = registry(&a.registry)?;
    let inputs: Vec<PathBuf> = if a.input.is_dir() {
        if a.out_dir.is_none() {
            return Err(usage("--out-dir is required when --in is a directory"));
        }
        collect_inputs(&a.input)?
            .into_iter()
            .map(|(p, _)| p)
            .collect()
    } else {
        vec![a.input.clone()]
    };
    let results = inputs
        .par_iter()
        .map(|p| scan_one(p, &reg))
        .collect::<CliResult<Vec<_>>>()?;
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).map_err(fail)?;
        for (p, r) in inputs.iter().zip(&results) {
            let stem = p.file_stem().unwrap_or_default();
            let mut text = serde_json::to_vec(r).map_err(fail)?;
            text.push(b'\n');
            fs::write(dir.join(stem).with_extension("json"), text).map_err(fail)?;
        }
    }
    let mut out = io::stdout().lock();
    for (p, r) in inputs.iter().zip(&results) {
        let line = if a.json {
            serde_json::to_string(r).map_err(fail)?
        } else if r.found {
            format!(
                "{}: tag found, active [{}]",
                p.display(),
                r.active.join(",")
            )
        } else {
            format!("{}: no tag", p.display())
        };
        writeln!(out, "{line}").map_err(fail)?;
    }
    Ok(())
}

fn cmd_tag_poll(a: &TagPollArgs) -> CliResult {
    let reg = registry(&a.apps)?;
    if a.module_px == 0 {
        return Err(usage("--module-px must be at least 1"));
    }
    // fail early on a registry the payload format cannot carry
    payload_encode::<&str>(&reg, &[]).map_err(usage)?;
    fs::create_dir_all(&a.out_dir).map_err(fail)?;
    let provider = FileStateProvider::new(&a.state_file);
    let mut poller =
        Poller::new(SystemClock::default(), provider, reg.clone(), a.period).map_err(usage)?;
    let mut out = io::stdout().lock();
    let mut taken = 0u64;
    while a.count.is_none_or(|n| taken < n) {
        let snap = poller.tick();
        let tag = encode_tag(&reg, &snap.active, a.module_px).map_err(fail)?;
        let path = a.out_dir.join(format!("tag_{:06}.ppm", snap.index));
        save_image(&tag, &path).map_err(fail)?;
        let line = serde_json::json!({
            "index": snap.index,
            "timestamp": snap.timestamp,
            "active": snap.active,
            "stale": snap.stale,
            "path": path,
        });
        writeln!(out, "{line}")
            .and_then(|_| out.flush())
            .map_err(fail)?;
        taken += 1;
    }
    Ok(())
}
