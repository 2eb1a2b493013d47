//! `gprwi` command-line workflows.

pub mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gprwi::dataset::{generate_dataset_with, open_dataset, split_dataset, DatasetManifest, GenOptions, MANIFEST_FILE};
use gprwi::defaults::DATASET_SIZE;
use gprwi::em::{read_bscan, run_bscan, write_bscan, BScan};
use gprwi::eval::{classify_material, evaluate, render_report, report_csv, MaterialCatalog};
use gprwi::model::{build_model, compare_reports, fine_tune, predict, predict_set, train, EpochRecord, ModelConfig, SampleSet, TrainOutcome};
use gprwi::scene::parse_scene;
use gprwi::signal::{normalize, preprocess, read_radargram, to_bscan};
use gprwi_nn::{read_checkpoint, write_checkpoint, NnError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use config::{load_config, resolve_seed, ConfigFile};

#[derive(Debug, Parser)]
#[command(name = "gprwi", version, about = "Simulate GPR wall scans, train the inversion network and evaluate it")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one B-scan of a scene file.
    Simulate(SimulateArgs),
    /// Generate a synthetic dataset of random walls.
    GenDataset(GenArgs),
    /// Calibrate, filter and cut a measured radargram into network-ready segments.
    Preprocess(PrepArgs),
    /// Train a fresh network on a dataset.
    Train(TrainArgs),
    /// Continue training from a checkpoint.
    Finetune(FinetuneArgs),
    /// Predict the layer stack of one or more scans.
    Predict(PredictArgs),
    /// Score a trained network on a dataset.
    Evaluate(EvalArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed. Falls back to the config file, then GPRWI_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scene file to simulate.
    #[arg(long, value_name = "FILE")]
    pub scene: PathBuf,
    /// Output `.bscan` file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of samples.
    #[arg(short = 'n', long = "samples")]
    pub n: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Radargram to process (`.bscan` or CSV).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Output directory for the segments.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// High-pass cutoff in Hz.
    #[arg(long)]
    pub cutoff_hz: Option<f64>,
    /// First-break threshold as a fraction of each trace's peak.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Traces per segment.
    #[arg(long)]
    pub segment_width: Option<usize>,
    /// Segments cut from the scan.
    #[arg(long)]
    pub segments_per_scan: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dataset directory.
    #[arg(long, value_name = "DIR")]
    pub dataset: Option<PathBuf>,
    /// Output directory for the checkpoint and reports.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Number of epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Fraction of the dataset used for training.
    #[arg(long)]
    pub split_ratio: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Checkpoint to start from.
    #[arg(long, value_name = "FILE")]
    pub from: PathBuf,
    /// Also train a fresh network with the same settings and write a comparison.
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    JsonLines,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: Common,
    /// Checkpoint to load.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Scan to invert (`.bscan`, or a 40-trace CSV radargram); repeatable.
    #[arg(long, value_name = "FILE", required = true)]
    pub scan: Vec<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
    /// Material catalog (`name,eps_r` lines); the built-in one otherwise.
    #[arg(long, value_name = "FILE")]
    pub catalog: Option<PathBuf>,
    /// Write predictions here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    All,
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Checkpoint to load.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long, value_name = "DIR")]
    pub dataset: Option<PathBuf>,
    /// Material catalog (`name,eps_r` lines); the built-in one otherwise.
    #[arg(long, value_name = "FILE")]
    pub catalog: Option<PathBuf>,
    /// Output directory for the report.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Part of the dataset to score, split as `train` does with the same seed.
    #[arg(long, value_enum, default_value = "test")]
    pub split: Split,
    /// Fraction of the dataset in the training part.
    #[arg(long)]
    pub split_ratio: Option<f64>,
}

/// Failure of one stage of a command.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Exit code for a library error: 2 for bad input, 3 for simulation, 4 for I/O.
pub fn exit_code(e: &gprwi::Error) -> i32 {
    use gprwi::Error as E;
    match e {
        E::StabilityViolation { .. } | E::Geometry(_) | E::Constraint { .. } => EXIT_SIMULATION,
        E::Io { .. } | E::NotFound(_) | E::Nn(NnError::Io { .. }) => EXIT_IO,
        E::Sample { source, .. } => exit_code(source),
        E::NonFiniteLoss { .. } => EXIT_FAILURE,
        E::Nn(NnError::NonFinite(_)) => EXIT_FAILURE,
        _ => EXIT_PARSE,
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for gprwi::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError { stage, code: exit_code(&e), message: e.to_string() })
    }
}

impl<T> Stage<T> for Result<T, NnError> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(gprwi::Error::from).stage(stage)
    }
}

fn fail(stage: &'static str, code: i32, message: impl Into<String>) -> CliError {
    CliError { stage, code, message: message.into() }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    fail("write", EXIT_IO, format!("{}: {e}", path.display()))
}

/// Paths created by a command, removed again unless the command succeeds.
#[derive(Default)]
struct Outputs {
    created: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    /// Registers `path` for cleanup if it does not exist yet.
    fn claim(&mut self, path: &Path) -> PathBuf {
        if !path.exists() {
            self.created.push(path.to_path_buf());
        }
        path.to_path_buf()
    }

    fn dir(&mut self, path: &Path) -> Result<PathBuf, CliError> {
        let p = self.claim(path);
        std::fs::create_dir_all(&p).map_err(|e| io_err(&p, e))?;
        Ok(p)
    }

    fn write(&mut self, path: &Path, text: &str) -> Result<(), CliError> {
        let p = self.claim(path);
        std::fs::write(&p, text).map_err(|e| io_err(&p, e))
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in self.created.iter().rev() {
            let _ = if p.is_dir() { std::fs::remove_dir_all(p) } else { std::fs::remove_file(p) };
        }
    }
}

fn config_of(common: &Common) -> Result<(ConfigFile, u64), CliError> {
    let file = match &common.config {
        Some(p) => load_config(p).map_err(|e| fail("config", EXIT_PARSE, e.0))?,
        None => ConfigFile::default(),
    };
    let seed = resolve_seed(common.seed, &file).map_err(|e| fail("config", EXIT_PARSE, e.0))?;
    Ok((file, seed))
}

fn absolute(p: PathBuf) -> PathBuf {
    std::path::absolute(&p).unwrap_or(p)
}

fn required(flag: Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| file.clone())
        .map(absolute)
        .ok_or_else(|| fail("arguments", EXIT_PARSE, format!("--{name} is required (or set paths.{name} in the config)")))
}

fn load_catalog(path: Option<&Path>) -> Result<MaterialCatalog, CliError> {
    match path {
        None => Ok(MaterialCatalog::builtin()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| fail("catalog", EXIT_IO, format!("{}: {e}", p.display())))?;
            MaterialCatalog::parse(&text).stage("catalog")
        }
    }
}

/// Runs one command. `progress` receives human-readable progress lines; the
/// returned value is the run summary.
pub fn run(cli: Cli, progress: &mut dyn FnMut(&str)) -> Result<Value, CliError> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::GenDataset(a) => cmd_gen_dataset(a, progress),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Train(a) => cmd_train(a, progress),
        Command::Finetune(a) => cmd_finetune(a, progress),
        Command::Predict(a) => cmd_predict(a, progress),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}

pub fn cmd_simulate(a: SimulateArgs) -> Result<Value, CliError> {
    let (file, seed) = config_of(&a.common)?;
    let text = std::fs::read_to_string(&a.scene).map_err(|e| fail("read scene", EXIT_IO, format!("{}: {e}", a.scene.display())))?;
    let mut scene = parse_scene(&text).stage("parse scene")?;
    if a.common.seed.is_some() {
        scene.seed = seed;
    }
    let scan = run_bscan(&scene, &file.acquisition()).stage("simulate")?;
    let out = absolute(a.out);
    let mut outputs = Outputs::default();
    outputs.claim(&out);
    write_bscan(&out, &scan).stage("write scan")?;
    outputs.commit();
    Ok(json!({
        "command": "simulate",
        "out": out,
        "layers": scene.layers.len(),
        "grains": scene.grains.len(),
        "shape": [scan.rows(), scan.cols()],
    }))
}

pub fn cmd_gen_dataset(a: GenArgs, progress: &mut dyn FnMut(&str)) -> Result<Value, CliError> {
    let (file, seed) = config_of(&a.common)?;
    let n = a.n.or(file.dataset.n_samples).unwrap_or(DATASET_SIZE);
    let workers = a.workers.or(file.dataset.workers).unwrap_or(1);
    let out = required(a.out, &file.paths.out, "out")?;
    let mut outputs = Outputs::default();
    outputs.dir(&out)?;
    outputs.claim(&out.join(MANIFEST_FILE));
    outputs.claim(&out.join("scans"));
    let opts = GenOptions { acquisition: file.acquisition(), workers };
    let done = std::sync::Mutex::new(Vec::new());
    let m = generate_dataset_with(n, seed, &out, &opts, &|k| {
        if let Ok(mut d) = done.lock() {
            d.push(k);
        }
    })
    .stage("generate dataset")?;
    for k in done.into_inner().unwrap_or_default() {
        progress(&format!("simulated {k}/{n}"));
    }
    outputs.commit();
    let mut hist = [0usize; 7];
    for e in &m.entries {
        hist[e.layers.min(6)] += 1;
    }
    Ok(json!({
        "command": "gen-dataset",
        "out": out,
        "samples": m.n_samples(),
        "seed": seed,
        "layer_histogram": hist[1..],
    }))
}

pub fn cmd_preprocess(a: PrepArgs) -> Result<Value, CliError> {
    let (file, seed) = config_of(&a.common)?;
    let mut opts = file.prep();
    if let Some(v) = a.cutoff_hz {
        opts.cutoff_hz = v;
    }
    if let Some(v) = a.threshold {
        opts.threshold_frac = v;
    }
    if let Some(v) = a.segment_width {
        opts.segment_width = v;
    }
    if let Some(v) = a.segments_per_scan {
        opts.segments_per_scan = v;
    }
    let out = required(a.out, &file.paths.out, "out")?;
    let raw = read_radargram(&a.input).stage("read radargram")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let segments = preprocess(&raw, &opts, &mut rng).stage("preprocess")?;
    let mut outputs = Outputs::default();
    outputs.dir(&out)?;
    let mut files = Vec::new();
    for (i, s) in segments.iter().enumerate() {
        let p = outputs.claim(&out.join(format!("segment_{i:03}.bscan")));
        write_bscan(&p, s).stage("write segment")?;
        files.push(p);
    }
    outputs.commit();
    Ok(json!({
        "command": "preprocess",
        "input": a.input,
        "out": out,
        "segments": files.len(),
        "seed": seed,
    }))
}

struct TrainSetup {
    file: ConfigFile,
    cfg: ModelConfig,
    dataset: PathBuf,
    out: PathBuf,
    train_set: SampleSet,
    test_set: SampleSet,
}

fn load_split(dataset: &Path, ratio: f64, seed: u64) -> Result<(DatasetManifest, DatasetManifest), CliError> {
    let m = open_dataset(dataset).stage("open dataset")?;
    split_dataset(&m, ratio, seed).stage("split dataset")
}

fn setup_training(a: TrainArgs) -> Result<TrainSetup, CliError> {
    let (file, seed) = config_of(&a.common)?;
    let mut cfg = file.model(seed);
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    cfg.validate().stage("model config")?;
    let dataset = required(a.dataset, &file.paths.dataset, "dataset")?;
    let out = required(a.out, &file.paths.out, "out")?;
    let ratio = a.split_ratio.unwrap_or_else(|| file.split_ratio());
    let (tr, te) = load_split(&dataset, ratio, seed)?;
    let train_set = SampleSet::from_manifest(&tr).stage("load samples")?;
    let test_set = SampleSet::from_manifest(&te).stage("load samples")?;
    Ok(TrainSetup { file, cfg, dataset, out, train_set, test_set })
}

fn epoch_line(tag: &str, total: usize, r: &EpochRecord) -> String {
    format!(
        "{tag}epoch {}/{total} train_loss={:.6} test_loss={:.6} ({:.1}s)",
        r.epoch, r.train_loss, r.test_loss, r.seconds
    )
}

fn write_training(outputs: &mut Outputs, dir: &Path, prefix: &str, o: &TrainOutcome) -> Result<(), CliError> {
    let ck = outputs.claim(&dir.join(format!("{prefix}model.ckpt")));
    write_checkpoint(&ck, &o.model, Some(&o.adam)).stage("write checkpoint")?;
    outputs.write(&dir.join(format!("{prefix}report.csv")), &o.report.to_csv())?;
    outputs.write(&dir.join(format!("{prefix}losses.csv")), &o.report.loss_csv())?;
    if let Some(m) = &o.report.final_metrics {
        outputs.write(&dir.join(format!("{prefix}metrics.csv")), &report_csv(m))?;
        outputs.write(&dir.join(format!("{prefix}report.txt")), &render_report(m))?;
    }
    Ok(())
}

fn train_summary(command: &str, s: &TrainSetup, o: &TrainOutcome) -> Value {
    let m = o.report.final_metrics.as_ref();
    json!({
        "command": command,
        "dataset": s.dataset,
        "out": s.out,
        "seed": s.cfg.seed,
        "train_samples": s.train_set.len(),
        "test_samples": s.test_set.len(),
        "epochs_run": o.report.epochs.len(),
        "best_epoch": o.report.best_epoch,
        "best_test_loss": o.report.best_test_loss,
        "parameters": o.report.parameter_count,
        "pretrained": o.report.pretrained,
        "test_thickness_mae_m": m.map(|m| m.thickness.overall),
        "test_permittivity_mae": m.map(|m| m.permittivity.overall),
    })
}

pub fn cmd_train(a: TrainArgs, progress: &mut dyn FnMut(&str)) -> Result<Value, CliError> {
    let s = setup_training(a)?;
    let model = build_model::<f32>(&s.cfg).stage("build model")?;
    let total = s.cfg.epochs;
    let o = train(model, &s.train_set, &s.test_set, &s.cfg, &mut |r| progress(&epoch_line("", total, r))).stage("train")?;
    let mut outputs = Outputs::default();
    outputs.dir(&s.out)?;
    write_training(&mut outputs, &s.out, "", &o)?;
    outputs.commit();
    Ok(train_summary("train", &s, &o))
}

pub fn cmd_finetune(a: FinetuneArgs, progress: &mut dyn FnMut(&str)) -> Result<Value, CliError> {
    let from = absolute(a.from);
    let mut s = setup_training(a.train)?;
    let m = &s.file.model;
    let topology_given = m.conv_channels.is_some() || m.kernel.is_some() || m.linear_sizes.is_some() || m.flatten_dim.is_some();
    if !topology_given {
        let ck = read_checkpoint::<f32>(&from).stage("read checkpoint")?;
        let spec = ck.network.spec();
        s.cfg.conv_channels = spec.conv_channels.clone();
        s.cfg.kernel = spec.kernel;
        s.cfg.linear_sizes = spec.linear_sizes.clone();
        s.cfg.flatten_dim = spec.flatten_dim().stage("read checkpoint")?;
    }
    let total = s.cfg.epochs;
    let o = fine_tune::<f32>(&from, &s.train_set, &s.test_set, &s.cfg, &mut |r| progress(&epoch_line("", total, r)))
        .stage("fine-tune")?;
    let fresh = if a.compare {
        let model = build_model::<f32>(&s.cfg).stage("build model")?;
        Some(
            train(model, &s.train_set, &s.test_set, &s.cfg, &mut |r| progress(&epoch_line("fresh ", total, r)))
                .stage("train fresh")?,
        )
    } else {
        None
    };
    let mut outputs = Outputs::default();
    outputs.dir(&s.out)?;
    write_training(&mut outputs, &s.out, "", &o)?;
    if let Some(f) = &fresh {
        write_training(&mut outputs, &s.out, "fresh_", f)?;
        outputs.write(&s.out.join("comparison.txt"), &compare_reports(&o.report, &f.report))?;
    }
    outputs.commit();
    let mut v = train_summary("finetune", &s, &o);
    v["from"] = json!(from);
    if let Some(f) = &fresh {
        v["fresh_best_test_loss"] = json!(f.report.best_test_loss);
    }
    Ok(v)
}

fn load_scan(path: &Path) -> Result<BScan, CliError> {
    let is_bscan = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("bscan"));
    let scan = if is_bscan {
        read_bscan(path).stage("read scan")?
    } else {
        to_bscan(&read_radargram(path).stage("read scan")?).stage("read scan")?
    };
    scan.ensure_canonical().stage("read scan")?;
    normalize(&scan).stage("normalize scan")
}

pub fn cmd_predict(a: PredictArgs, progress: &mut dyn FnMut(&str)) -> Result<Value, CliError> {
    let (file, _) = config_of(&a.common)?;
    let model_path = required(a.model, &file.paths.model, "model")?;
    let cat = load_catalog(a.catalog.as_deref().or(file.paths.catalog.as_deref()))?;
    let net = read_checkpoint::<f32>(&model_path).stage("read checkpoint")?.network;
    let mut text = String::new();
    for path in &a.scan {
        let p = predict(&net, &load_scan(path)?).stage("predict")?;
        let mut layers = Vec::new();
        for l in &p.wall.layers {
            let class = classify_material(l.eps_r, &cat).stage("classify")?;
            layers.push((l.thickness_m, l.eps_r, class.name.clone()));
        }
        match a.format {
            OutputFormat::Text => {
                let _ = writeln!(text, "{}: {} layer(s)", path.display(), layers.len());
                for (i, (d, e, name)) in layers.iter().enumerate() {
                    let _ = writeln!(text, "  layer {}: {:.1} mm, eps_r {:.2} ({name})", i + 1, d * 1e3, e);
                }
            }
            OutputFormat::JsonLines => {
                let v = json!({
                    "scan": path,
                    "layers": layers.iter().map(|(d, e, name)| json!({"thickness_m": d, "eps_r": e, "material": name})).collect::<Vec<_>>(),
                    "raw": p.raw.0,
                });
                let _ = writeln!(text, "{v}");
            }
        }
    }
    match &a.out {
        Some(out) => {
            let mut outputs = Outputs::default();
            outputs.write(&absolute(out.clone()), &text)?;
            outputs.commit();
        }
        None => {
            for line in text.lines() {
                progress(line);
            }
        }
    }
    Ok(json!({
        "command": "predict",
        "model": model_path,
        "scans": a.scan.len(),
        "out": a.out.map(absolute),
    }))
}

pub fn cmd_evaluate(a: EvalArgs) -> Result<Value, CliError> {
    let (file, seed) = config_of(&a.common)?;
    let model_path = required(a.model, &file.paths.model, "model")?;
    let dataset = required(a.dataset, &file.paths.dataset, "dataset")?;
    let out = required(a.out, &file.paths.out, "out")?;
    let cat = load_catalog(a.catalog.as_deref().or(file.paths.catalog.as_deref()))?;
    let net = read_checkpoint::<f32>(&model_path).stage("read checkpoint")?.network;
    let m = match a.split {
        Split::All => open_dataset(&dataset).stage("open dataset")?,
        Split::Train | Split::Test => {
            let ratio = a.split_ratio.unwrap_or_else(|| file.split_ratio());
            let (tr, te) = load_split(&dataset, ratio, seed)?;
            if a.split == Split::Train { tr } else { te }
        }
    };
    let set = SampleSet::from_manifest(&m).stage("load samples")?;
    let preds = predict_set(&net, &set, 16).stage("predict")?;
    let report = evaluate(&preds, &set.targets(), Some(&cat)).stage("evaluate")?;
    let mut outputs = Outputs::default();
    outputs.dir(&out)?;
    outputs.write(&out.join("metrics.csv"), &report_csv(&report))?;
    outputs.write(&out.join("report.txt"), &render_report(&report))?;
    outputs.commit();
    Ok(json!({
        "command": "evaluate",
        "model": model_path,
        "dataset": dataset,
        "out": out,
        "samples": report.n_samples,
        "thickness_mae_m": report.thickness.overall,
        "thickness_error_pct": report.thickness.overall_pct,
        "permittivity_mae": report.permittivity.overall,
        "permittivity_error_pct": report.permittivity.overall_pct,
        "classification_accuracy": report.accuracy,
    }))
}

/// Parses `args`, runs the command and prints progress and the summary line.
/// Returns the process exit code.
pub fn main_with<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut progress = |line: &str| {
        let mut h = stdout.lock();
        let _ = writeln!(h, "{line}");
    };
    match run(cli, &mut progress) {
        Ok(mut v) => {
            v["status"] = json!("ok");
            println!("{v}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            println!("{}", json!({"status": "error", "stage": e.stage, "exit_code": e.code, "message": e.message}));
            e.code
        }
    }
}
