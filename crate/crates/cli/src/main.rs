mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use spoofguard::chansim::{gen_dataset, list_captures, ChannelParams, Dataset};
use spoofguard::detector::{Decision, DetectorState};
use spoofguard::evalkit::{
    holdout_split, images_of, kfold_outcomes, measure_overhead, report_from_outcomes,
    snr_overlap_summary, EvalConfig,
};
use spoofguard::imaging::{export_pgm, make_histogram};
use spoofguard::iq::{Capture, IqChunk};
use spoofguard::sparse_ae::train;
use spoofguard::Error;

use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "spoofguard", version, about = "Detect spoofed downlink transmissions from raw IQ samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled synthetic dataset
    Simulate(SimulateArgs),
    /// Train a detector on the legitimate captures of a dataset
    Train(TrainArgs),
    /// Classify every chunk of one or more captures
    Detect(DetectArgs),
    /// K-fold evaluation with AUC quantiles, SNR overlap and timing
    Eval(EvalArgs),
    /// Write each chunk of a dataset as a PGM image
    ExportImages(ExportArgs),
}

#[derive(Args)]
struct Common {
    /// key=value configuration file; flags take precedence
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, env = "SPOOFGUARD_SEED")]
    seed: Option<u64>,
    /// Samples per chunk
    #[arg(long)]
    chunk_size: Option<usize>,
    /// Capture encoding: cf32le, ci16le or cu8
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct GridArgs {
    /// Bins per axis
    #[arg(long)]
    grid: Option<usize>,
    /// The grid covers [-h, h] on both axes
    #[arg(long)]
    half_range: Option<f64>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    latent: Option<usize>,
    /// L-BFGS iterations
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    sparsity_weight: Option<f64>,
    #[arg(long)]
    sparsity_target: Option<f64>,
    #[arg(long)]
    l2_weight: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: PathBuf,
    /// Chunks per class
    #[arg(long)]
    chunks: Option<usize>,
    /// Legitimate noise standard deviation; the spoofer gets three times this
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Dataset directory of .iq captures with .meta sidecars
    #[arg(long)]
    data: PathBuf,
    /// Output stem; writes <stem>.aemd and <stem>.json
    #[arg(long)]
    out: PathBuf,
    /// Fraction of legitimate chunks held out from training
    #[arg(long)]
    holdout: Option<f64>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    common: Common,
    /// Detector sidecar (.json) written by `train`
    #[arg(long)]
    model: PathBuf,
    /// Also write the per-chunk results as JSON
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    #[arg(required = true)]
    captures: Vec<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    data: PathBuf,
    /// Report directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    /// Repetitions per timing median
    #[arg(long)]
    timing_reps: Option<usize>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Data(String),
    Compat(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Compat(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Compat(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidArgument(_) => Failure::Usage(msg),
            Error::ModelFormat(_) | Error::DimensionMismatch { .. } => Failure::Compat(msg),
            _ => Failure::Data(msg),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => train_cmd(a),
        Command::Detect(a) => detect(a),
        Command::Eval(a) => eval(a),
        Command::ExportImages(a) => export_images(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

/// Defaults, then the config file, then explicit flags.
fn resolve(common: &Common, overrides: &[(&str, Option<String>)]) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    let base = [
        ("seed", common.seed.map(|v| v.to_string())),
        ("chunk_size", common.chunk_size.map(|v| v.to_string())),
        ("format", common.format.clone()),
    ];
    for (key, value) in base.iter().chain(overrides) {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn s<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|x| x.to_string())
}

fn grid_overrides(g: &GridArgs) -> Vec<(&'static str, Option<String>)> {
    vec![("grid", s(g.grid)), ("half_range", s(g.half_range))]
}

fn model_overrides(m: &ModelArgs) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("latent", s(m.latent)),
        ("epochs", s(m.epochs)),
        ("sparsity_weight", s(m.sparsity_weight)),
        ("sparsity_target", s(m.sparsity_target)),
        ("l2_weight", s(m.l2_weight)),
    ]
}

/// Creates `dir` and proves it is writable before any work starts.
fn ensure_writable(dir: &Path) -> Result<(), Failure> {
    let unusable = |e: std::io::Error| Failure::Usage(format!("output location {} is not writable: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(unusable)?;
    let probe = dir.join(".spoofguard-write-test");
    fs::write(&probe, b"").map_err(unusable)?;
    let _ = fs::remove_file(&probe);
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("json serializes");
    fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn load_dataset(dir: &Path, cfg: &RunConfig) -> Result<Dataset, Failure> {
    let ds = Dataset::load(dir, cfg.chunk_size, cfg.format_kind()?)?;
    if ds.legit.len() < 2 {
        return Err(Failure::Data(format!(
            "{} holds {} legitimate chunks of {} samples; at least 2 are needed",
            dir.display(),
            ds.legit.len(),
            cfg.chunk_size
        )));
    }
    Ok(ds)
}

fn simulate(a: SimulateArgs) -> Outcome {
    let cfg = resolve(&a.common, &[("chunks", s(a.chunks)), ("sigma", s(a.sigma))])?;
    ensure_writable(&a.out)?;
    let legit = ChannelParams::legitimate(cfg.sigma, spoofguard::chansim::derive_seed(cfg.seed, 0));
    let spoof = ChannelParams::spoofer(cfg.sigma, spoofguard::chansim::derive_seed(cfg.seed, 1));
    let ds = gen_dataset(&legit, &spoof, cfg.chunks, cfg.chunk_size)?;
    let files = ds.export(&a.out)?;
    write_json(
        &a.out.join("run_config.json"),
        &json!({ "command": "simulate", "config": cfg.to_json(), "legitimate": legit, "spoofed": spoof }),
    )?;
    println!(
        "wrote {} captures ({} legitimate, {} spoofed) to {}",
        files.len(),
        ds.legit.len(),
        ds.spoof.len(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn train_cmd(a: TrainArgs) -> Outcome {
    let mut over = grid_overrides(&a.grid);
    over.extend(model_overrides(&a.model));
    over.push(("holdout", s(a.holdout)));
    let cfg = resolve(&a.common, &over)?;
    let parent = match a.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    ensure_writable(&parent)?;

    let grid = cfg.grid_spec()?;
    let ds = load_dataset(&a.data, &cfg)?;
    let images = images_of(&ds.legit, &grid)?;
    let (train_idx, held_idx) = holdout_split(images.len(), cfg.holdout, cfg.seed)?;
    if train_idx.len() < 2 {
        return Err(Failure::Data("fewer than 2 training images after the holdout".into()));
    }
    let train_images: Vec<Vec<f64>> = train_idx.iter().map(|&i| images[i].clone()).collect();
    let model = train(&train_images, &cfg.train_config())?;
    let det = DetectorState::fit(model, &train_images, grid, cfg.chunk_size)?;

    let mut flagged = 0;
    for &i in &held_idx {
        if det.classify_vector(&images[i])?.decision == Decision::Spoofed {
            flagged += 1;
        }
    }
    let meta = json!({
        "command": "train",
        "config": cfg.to_json(),
        "train_images": train_idx.len(),
        "holdout_images": held_idx.len(),
        "holdout_flagged": flagged,
    });
    let (model_path, side_path) = det.save(&a.out, Some(meta))?;
    println!("tau {:.6e} (mean {:.6e}, std {:.6e})", det.tau, det.mean_train, det.std_train);
    println!(
        "trained on {} images; {} of {} held-out legitimate images flagged",
        train_idx.len(),
        flagged,
        held_idx.len()
    );
    println!("wrote {} and {}", model_path.display(), side_path.display());
    Ok(ExitCode::SUCCESS)
}

fn detect(a: DetectArgs) -> Outcome {
    let cfg = resolve(&a.common, &[])?;
    if let Some(report) = &a.report {
        if let Some(p) = report.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_writable(p)?;
        }
    }
    let det = match DetectorState::load(&a.model) {
        Err(Error::Io { path, source }) => {
            return Err(Failure::Data(format!("cannot read {}: {source}", path.display())))
        }
        Err(Error::Json { path, source }) => {
            return Err(Failure::Compat(format!("{} is not a detector sidecar: {source}", path.display())))
        }
        other => other?,
    };
    if a.common.chunk_size.is_some() && cfg.chunk_size != det.chunk_size {
        return Err(Failure::Compat(format!(
            "detector was trained on chunks of {} samples, not {}",
            det.chunk_size, cfg.chunk_size
        )));
    }
    let format = cfg.format_kind()?;

    println!("capture\tchunk\tmse\ttau\tdecision");
    let mut rows = Vec::new();
    let (mut n_spoofed, mut total) = (0usize, 0usize);
    for path in &a.captures {
        let chunks: Vec<IqChunk> = Capture::load(path, format)?.chunks(det.chunk_size)?;
        if chunks.is_empty() {
            return Err(Failure::Data(format!(
                "{} has fewer than {} samples",
                path.display(),
                det.chunk_size
            )));
        }
        for (k, c) in chunks.iter().enumerate() {
            let v = det.classify(&make_histogram(c, &det.grid)?)?;
            let decision = match v.decision {
                Decision::Legitimate => "legitimate",
                Decision::Spoofed => "spoofed",
            };
            n_spoofed += usize::from(v.decision == Decision::Spoofed);
            total += 1;
            println!("{}\t{k}\t{:.6e}\t{:.6e}\t{decision}", path.display(), v.mse, v.tau);
            rows.push(json!({ "capture": path, "chunk": k, "mse": v.mse, "tau": v.tau, "decision": decision }));
        }
    }
    println!("{total} chunks: {} legitimate, {n_spoofed} spoofed", total - n_spoofed);
    if let Some(report) = &a.report {
        write_json(
            report,
            &json!({ "command": "detect", "config": cfg.to_json(), "model": a.model, "chunks": rows }),
        )?;
    }
    Ok(if n_spoofed > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn eval(a: EvalArgs) -> Outcome {
    let mut over = grid_overrides(&a.grid);
    over.extend(model_overrides(&a.model));
    over.push(("k", s(a.k)));
    over.push(("timing_reps", s(a.timing_reps)));
    let cfg = resolve(&a.common, &over)?;
    ensure_writable(&a.out)?;

    let grid = cfg.grid_spec()?;
    let ds = load_dataset(&a.data, &cfg)?;
    if ds.spoof.is_empty() {
        return Err(Failure::Data(format!("{} holds no spoofed chunks", a.data.display())));
    }
    if ds.legit.len() < cfg.k {
        return Err(Failure::Data(format!(
            "{} legitimate chunks cannot fill {} folds",
            ds.legit.len(),
            cfg.k
        )));
    }
    let legit = images_of(&ds.legit, &grid)?;
    let spoof = images_of(&ds.spoof, &grid)?;
    let ecfg = EvalConfig {
        k: cfg.k,
        train: cfg.train_config(),
        shuffle_seed: cfg.seed,
    };
    let outcomes = kfold_outcomes(&legit, &spoof, &ecfg)?;
    let mut report = report_from_outcomes(&outcomes, legit.len(), spoof.len(), &ecfg)?;
    report.config = json!({ "command": "eval", "config": cfg.to_json() });
    report.snr_overlap = Some(snr_overlap_summary(&ds.legit, &ds.spoof)?);
    let det = DetectorState::fit(outcomes[0].model.clone(), &legit, grid, cfg.chunk_size)?;
    report.timing = Some(measure_overhead(&det, &ds.legit[0], cfg.timing_reps)?);
    report.write_all(&a.out)?;
    print!("{}", report.to_text());
    Ok(ExitCode::SUCCESS)
}

fn export_images(a: ExportArgs) -> Outcome {
    let cfg = resolve(&a.common, &grid_overrides(&a.grid))?;
    ensure_writable(&a.out)?;
    let grid = cfg.grid_spec()?;
    let format = cfg.format_kind()?;
    let mut written = 0;
    for path in list_captures(&a.data)? {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        for (k, c) in Capture::load(&path, format)?.chunks(cfg.chunk_size)?.iter().enumerate() {
            let out = a.out.join(format!("{stem}_{k:04}.pgm"));
            export_pgm(&make_histogram(c, &grid)?, &out)?;
            written += 1;
        }
    }
    write_json(
        &a.out.join("run_config.json"),
        &json!({ "command": "export-images", "config": cfg.to_json(), "images": written }),
    )?;
    println!("wrote {written} images to {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}
