//! Command-line front end for the bed-sensor cough-detection pipeline:
//! synthetic corpus generation, event detection, feature extraction,
//! single-model training, and patient-held-out grid evaluation.
//!
//! Every subcommand accepts `--config <file>` naming a TOML file whose keys
//! mirror the long flag names (`accel-frame-lens = [16, 32]`); explicit
//! flags win over config-file values, which win over built-in defaults.
//! Commands that fill an output directory also write `run_log.json` there
//! with the fully resolved configuration, the tool version, and wall-clock
//! timings; apart from those timings, identical inputs produce
//! byte-identical artifacts.
//!
//! Exit status: 0 on success, 2 for usage problems (unknown flags, missing
//! required inputs), 1 for pipeline failures (unreadable data, training
//! errors).

mod grids;
mod outputs;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use coughsense::classifiers::{train, ClassifierSpec};
use coughsense::error::Error;
use coughsense::evaluation::{make_folds, run_row, EvalOptions, EvalReport, FeatureConfig};
use coughsense::features::accel::{extract_accel_features, AccelFeatureConfig};
use coughsense::features::audio::{AudioFeatureConfig, AudioFeatureExtractor};
use coughsense::features::FeatureMatrix;
use coughsense::io::{
    atomic_write, load_events, read_accel_text, read_manifest, read_wav, safe_file_stem,
};
use coughsense::segmentation::{detect_events, SegmenterConfig};
use coughsense::signal::Label;
use coughsense::synth::{generate_dataset, SynthConfig};
use grids::Grids;
use outputs::{mean_roc_csv, results_csv, write_csv_artifacts, write_run_log, RunLog};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Failures split by exit status: usage problems exit 2, like clap's own
/// flag errors; pipeline failures exit 1.
enum CliError {
    Usage(String),
    Pipeline(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Pipeline(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Pipeline(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser)]
#[command(
    name = "coughsense",
    version,
    about = "Cough detection from paired bed-mounted accelerometer and audio signals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled event corpus
    Synth(SynthArgs),
    /// Detect candidate events in a continuous two-channel recording
    Detect(DetectArgs),
    /// Extract per-event feature matrices for one modality
    Featurize(FeaturizeArgs),
    /// Train one classifier on extracted features
    Train(TrainArgs),
    /// Patient-held-out cross-validation over a hyperparameter grid
    Evaluate(EvaluateArgs),
    /// Re-emit CSV artifacts from a saved evaluation report
    Report(ReportArgs),
}

/// Reads a subcommand's TOML config file, if one was named.
fn load_config<T: Default + for<'de> Deserialize<'de>>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

fn require<T>(value: Option<T>, what: &str) -> CliResult<T> {
    value.ok_or_else(|| usage(format!("{what} is required (flag or config file)")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Featurize(a) => cmd_featurize(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `coughsense <command> --help` for usage");
            ExitCode::from(2)
        }
        Err(CliError::Pipeline(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

// --- synth -------------------------------------------------------------

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
struct SynthArgs {
    /// Number of simulated patients [default: 14]
    #[arg(long)]
    patients: Option<usize>,
    /// Cough events per patient [default: 10]
    #[arg(long)]
    coughs: Option<usize>,
    /// Non-cough events per patient [default: 20]
    #[arg(long)]
    noncoughs: Option<usize>,
    /// Generator seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for event files, manifest, and run log
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file whose keys mirror the long flags
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl SynthArgs {
    fn merged_with(mut self, file: Self) -> Self {
        self.patients = self.patients.or(file.patients);
        self.coughs = self.coughs.or(file.coughs);
        self.noncoughs = self.noncoughs.or(file.noncoughs);
        self.seed = self.seed.or(file.seed);
        self.out = self.out.or(file.out);
        self
    }
}

fn cmd_synth(args: SynthArgs) -> CliResult<()> {
    let file = load_config(args.config.as_deref())?;
    let a = args.merged_with(file);
    let out = require(a.out, "--out <dir>")?;
    let defaults = SynthConfig::default();
    let cfg = SynthConfig {
        patients: a.patients.unwrap_or(defaults.patients),
        coughs_per_patient: a.coughs.unwrap_or(defaults.coughs_per_patient),
        non_coughs_per_patient: a.noncoughs.unwrap_or(defaults.non_coughs_per_patient),
        seed: a.seed.unwrap_or(defaults.seed),
    };

    let started = Instant::now();
    let manifest_path = generate_dataset(&cfg, &out)?;
    write_run_log(
        &out.join("run_log.json"),
        &RunLog {
            command: "synth",
            version: VERSION,
            config: &cfg,
            timings_s: BTreeMap::from([("total".to_string(), started.elapsed().as_secs_f64())]),
        },
    )?;

    eprintln!(
        "wrote {} events ({} patients x {} coughs + {} non-coughs) under {}",
        cfg.patients * (cfg.coughs_per_patient + cfg.non_coughs_per_patient),
        cfg.patients,
        cfg.coughs_per_patient,
        cfg.non_coughs_per_patient,
        out.display()
    );
    println!("{}", manifest_path.display());
    Ok(())
}

// --- detect ------------------------------------------------------------

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
struct DetectArgs {
    /// Accelerometer magnitude trace: text, one value per line, 100 Hz
    #[arg(long)]
    accel: Option<PathBuf>,
    /// Audio recording: mono 16-bit WAV at 22050 Hz
    #[arg(long)]
    audio: Option<PathBuf>,
    /// Energy window length in seconds [default: 0.1]
    #[arg(long)]
    window_s: Option<f64>,
    /// Hop between energy windows in seconds [default: 0.05]
    #[arg(long)]
    hop_s: Option<f64>,
    /// Active threshold as a multiple of median window energy [default: 4]
    #[arg(long)]
    threshold_factor: Option<f64>,
    /// Merge active stretches closer than this many seconds [default: 0.3]
    #[arg(long)]
    merge_gap_s: Option<f64>,
    /// Drop events shorter than this many seconds [default: 0.3]
    #[arg(long)]
    min_event_s: Option<f64>,
    /// Write intervals here (JSON lines) instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file whose keys mirror the long flags
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl DetectArgs {
    fn merged_with(mut self, file: Self) -> Self {
        self.accel = self.accel.or(file.accel);
        self.audio = self.audio.or(file.audio);
        self.window_s = self.window_s.or(file.window_s);
        self.hop_s = self.hop_s.or(file.hop_s);
        self.threshold_factor = self.threshold_factor.or(file.threshold_factor);
        self.merge_gap_s = self.merge_gap_s.or(file.merge_gap_s);
        self.min_event_s = self.min_event_s.or(file.min_event_s);
        self.out = self.out.or(file.out);
        self
    }
}

#[derive(Serialize)]
struct Interval {
    start_s: f64,
    end_s: f64,
}

#[derive(Serialize)]
struct ResolvedDetect {
    accel: PathBuf,
    audio: PathBuf,
    segmenter: SegmenterConfig,
}

fn cmd_detect(args: DetectArgs) -> CliResult<()> {
    let file = load_config(args.config.as_deref())?;
    let a = args.merged_with(file);
    let accel_path = require(a.accel, "--accel <file>")?;
    let audio_path = require(a.audio, "--audio <file>")?;
    let d = SegmenterConfig::default();
    let cfg = SegmenterConfig {
        window_s: a.window_s.unwrap_or(d.window_s),
        hop_s: a.hop_s.unwrap_or(d.hop_s),
        threshold_factor: a.threshold_factor.unwrap_or(d.threshold_factor),
        merge_gap_s: a.merge_gap_s.unwrap_or(d.merge_gap_s),
        min_event_s: a.min_event_s.unwrap_or(d.min_event_s),
    };

    let accel = read_accel_text(&accel_path)?;
    let audio = read_wav(&audio_path)?;
    let started = Instant::now();
    let intervals = detect_events(&accel, &audio, &cfg)?;

    let mut lines = String::new();
    for &(start_s, end_s) in &intervals {
        lines.push_str(&serde_json::to_string(&Interval { start_s, end_s })?);
        lines.push('\n');
    }
    let resolved = ResolvedDetect {
        accel: accel_path,
        audio: audio_path,
        segmenter: cfg,
    };
    match &a.out {
        Some(path) => {
            atomic_write(path, lines.as_bytes())?;
            let log_path = PathBuf::from(format!("{}.run_log.json", path.display()));
            write_run_log(
                &log_path,
                &RunLog {
                    command: "detect",
                    version: VERSION,
                    config: resolved,
                    timings_s: BTreeMap::from([(
                        "total".to_string(),
                        started.elapsed().as_secs_f64(),
                    )]),
                },
            )?;
            println!("{}", path.display());
        }
        None => {
            // No output directory to log into; record the resolved
            // configuration on stderr instead.
            eprintln!("config: {}", serde_json::to_string(&resolved)?);
            print!("{lines}");
        }
    }
    eprintln!("{} candidate events", intervals.len());
    Ok(())
}

// --- featurize ---------------------------------------------------------

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
struct FeaturizeArgs {
    /// Event manifest (JSON lines, as written by `synth`)
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Channel to featurize: accel | audio
    #[arg(long)]
    modality: Option<String>,
    /// Frame length in samples [default: 32 accel, 1024 audio]
    #[arg(long)]
    frame_len: Option<usize>,
    /// Frames extracted per event [default: 10 accel, 100 audio]
    #[arg(long)]
    segments: Option<usize>,
    /// Cepstral coefficients per frame, audio only [default: 13]
    #[arg(long)]
    mfcc: Option<usize>,
    /// Output directory for matrices, index, and run log
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file whose keys mirror the long flags
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl FeaturizeArgs {
    fn merged_with(mut self, file: Self) -> Self {
        self.manifest = self.manifest.or(file.manifest);
        self.modality = self.modality.or(file.modality);
        self.frame_len = self.frame_len.or(file.frame_len);
        self.segments = self.segments.or(file.segments);
        self.mfcc = self.mfcc.or(file.mfcc);
        self.out = self.out.or(file.out);
        self
    }
}

/// On-disk directory listing written next to the matrices so `train` can
/// reassemble the design matrix with labels.
#[derive(Serialize, Deserialize)]
struct FeatureIndex {
    config: FeatureConfig,
    events: Vec<IndexEntry>,
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    id: String,
    patient_id: String,
    label: Label,
    /// Matrix file, relative to the index.
    path: String,
}

#[derive(Serialize)]
struct ResolvedFeaturize {
    manifest: PathBuf,
    out: PathBuf,
    config: FeatureConfig,
}

fn cmd_featurize(args: FeaturizeArgs) -> CliResult<()> {
    let file = load_config(args.config.as_deref())?;
    let a = args.merged_with(file);
    let manifest_path = require(a.manifest, "--manifest <file>")?;
    let modality = require(a.modality, "--modality <accel|audio>")?;
    let out = require(a.out, "--out <dir>")?;

    let cfg = match modality.as_str() {
        "accel" => {
            if a.mfcc.is_some() {
                return Err(usage("--mfcc applies only to --modality audio"));
            }
            FeatureConfig::Accel(AccelFeatureConfig {
                frame_len: a.frame_len.unwrap_or(32),
                segments: a.segments.unwrap_or(10),
            })
        }
        "audio" => FeatureConfig::Audio(AudioFeatureConfig::new(
            a.mfcc.unwrap_or(13),
            a.frame_len.unwrap_or(1024),
            a.segments.unwrap_or(100),
        )),
        other => return Err(usage(format!("unknown modality {other:?} (accel or audio)"))),
    };

    let manifest = read_manifest(&manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let events = load_events(&manifest, base)?;
    if events.is_empty() {
        return Err(CliError::Pipeline("manifest lists no events".to_string()));
    }

    let started = Instant::now();
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Pipeline(format!("cannot create {}: {e}", out.display())))?;
    let entries: Vec<IndexEntry> = match &cfg {
        FeatureConfig::Accel(c) => events
            .par_iter()
            .map(|e| {
                let m = extract_accel_features(e, c)?;
                write_matrix(&out, e, &m)
            })
            .collect::<Result<_, Error>>()?,
        FeatureConfig::Audio(c) => {
            let extractor = AudioFeatureExtractor::new(*c)?;
            events
                .par_iter()
                .map(|e| {
                    let m = extractor.extract(e)?;
                    write_matrix(&out, e, &m)
                })
                .collect::<Result<_, Error>>()?
        }
    };

    let index = FeatureIndex {
        config: cfg.clone(),
        events: entries,
    };
    atomic_write(
        &out.join("features_index.json"),
        serde_json::to_string_pretty(&index)?.as_bytes(),
    )?;
    write_run_log(
        &out.join("run_log.json"),
        &RunLog {
            command: "featurize",
            version: VERSION,
            config: ResolvedFeaturize {
                manifest: manifest_path,
                out: out.clone(),
                config: cfg.clone(),
            },
            timings_s: BTreeMap::from([("total".to_string(), started.elapsed().as_secs_f64())]),
        },
    )?;

    eprintln!(
        "extracted {} matrices for {} into {}",
        index.events.len(),
        cfg.describe(),
        out.display()
    );
    println!("{}", out.join("features_index.json").display());
    Ok(())
}

fn write_matrix(
    out: &Path,
    event: &coughsense::signal::Event,
    matrix: &FeatureMatrix,
) -> Result<IndexEntry, Error> {
    let file = format!("{}.fmat", safe_file_stem(&event.id));
    matrix.write_binary(&out.join(&file))?;
    Ok(IndexEntry {
        id: event.id.clone(),
        patient_id: event.patient_id.clone(),
        label: event.label,
        path: file,
    })
}

// --- train -------------------------------------------------------------

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
struct TrainArgs {
    /// Directory written by `featurize` (reads its features_index.json)
    #[arg(long)]
    features: Option<PathBuf>,
    /// Classifier family: lr | svm | mlp
    #[arg(long)]
    classifier: Option<String>,
    /// Regularisation strength for lr, box constraint for svm [default: 1]
    #[arg(long)]
    strength: Option<f64>,
    /// Lasso mixing weight, lr only [default: 0.5]
    #[arg(long)]
    l1_ratio: Option<f64>,
    /// Ridge mixing weight, lr only [default: 0.5]
    #[arg(long)]
    l2_ratio: Option<f64>,
    /// RBF kernel coefficient, svm only [default: 1]
    #[arg(long)]
    kernel_coef: Option<f64>,
    /// Weight penalty, mlp only [default: 0.1]
    #[arg(long)]
    l2_penalty: Option<f64>,
    /// Hidden-layer width, mlp only [default: 10]
    #[arg(long)]
    neurons: Option<usize>,
    /// Seed for weight initialization [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Model JSON output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file whose keys mirror the long flags
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl TrainArgs {
    fn merged_with(mut self, file: Self) -> Self {
        self.features = self.features.or(file.features);
        self.classifier = self.classifier.or(file.classifier);
        self.strength = self.strength.or(file.strength);
        self.l1_ratio = self.l1_ratio.or(file.l1_ratio);
        self.l2_ratio = self.l2_ratio.or(file.l2_ratio);
        self.kernel_coef = self.kernel_coef.or(file.kernel_coef);
        self.l2_penalty = self.l2_penalty.or(file.l2_penalty);
        self.neurons = self.neurons.or(file.neurons);
        self.seed = self.seed.or(file.seed);
        self.out = self.out.or(file.out);
        self
    }
}

/// Rejects flags that were set but do not apply to the selected family.
fn forbid(flags: &[(&str, bool)], family: &str) -> CliResult<()> {
    for (name, set) in flags {
        if *set {
            return Err(usage(format!("{name} does not apply to --classifier {family}")));
        }
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> CliResult<()> {
    let file = load_config(args.config.as_deref())?;
    let a = args.merged_with(file);
    let features_dir = require(a.features, "--features <dir>")?;
    let family = require(a.classifier, "--classifier <lr|svm|mlp>")?;
    let out = require(a.out, "--out <file>")?;

    let spec = match family.as_str() {
        "lr" => {
            forbid(
                &[
                    ("--kernel-coef", a.kernel_coef.is_some()),
                    ("--l2-penalty", a.l2_penalty.is_some()),
                    ("--neurons", a.neurons.is_some()),
                ],
                "lr",
            )?;
            ClassifierSpec::LogisticRegression {
                strength: a.strength.unwrap_or(1.0),
                l1_weight: a.l1_ratio.unwrap_or(0.5),
                l2_weight: a.l2_ratio.unwrap_or(0.5),
            }
        }
        "svm" => {
            forbid(
                &[
                    ("--l1-ratio", a.l1_ratio.is_some()),
                    ("--l2-ratio", a.l2_ratio.is_some()),
                    ("--l2-penalty", a.l2_penalty.is_some()),
                    ("--neurons", a.neurons.is_some()),
                ],
                "svm",
            )?;
            ClassifierSpec::Svm {
                strength: a.strength.unwrap_or(1.0),
                kernel_coef: a.kernel_coef.unwrap_or(1.0),
            }
        }
        "mlp" => {
            forbid(
                &[
                    ("--strength", a.strength.is_some()),
                    ("--l1-ratio", a.l1_ratio.is_some()),
                    ("--l2-ratio", a.l2_ratio.is_some()),
                    ("--kernel-coef", a.kernel_coef.is_some()),
                ],
                "mlp",
            )?;
            ClassifierSpec::Mlp {
                l2: a.l2_penalty.unwrap_or(0.1),
                hidden: a.neurons.unwrap_or(10),
            }
        }
        other => return Err(usage(format!("unknown classifier {other:?} (lr, svm, or mlp)"))),
    };

    let index_path = features_dir.join("features_index.json");
    let text = std::fs::read_to_string(&index_path)
        .map_err(|e| CliError::Pipeline(format!("cannot read {}: {e}", index_path.display())))?;
    let index: FeatureIndex = serde_json::from_str(&text)
        .map_err(|e| CliError::Pipeline(format!("{}: {e}", index_path.display())))?;
    if index.events.is_empty() {
        return Err(CliError::Pipeline("feature index lists no events".to_string()));
    }

    let mut rows = Vec::with_capacity(index.events.len());
    let mut labels = Vec::with_capacity(index.events.len());
    for entry in &index.events {
        let m = FeatureMatrix::read_binary(&features_dir.join(&entry.path), index.config.modality())?;
        rows.push(m.flatten());
        labels.push(entry.label == Label::Cough);
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Pipeline(
            "feature matrices in the index have inconsistent widths".to_string(),
        ));
    }
    let x = ndarray_from_rows(&rows, d);

    let seed = a.seed.unwrap_or(0);
    let model = train(&spec, &x.view(), &labels, seed)?;
    // The saved model embeds the classifier spec, seed, and standardization,
    // so it is the run's own record; no separate run log is written.
    model.save(&out)?;

    eprintln!(
        "trained {} on {} events x {} features",
        spec.describe(),
        rows.len(),
        d
    );
    println!("{}", out.display());
    Ok(())
}

fn ndarray_from_rows(rows: &[Vec<f64>], d: usize) -> ndarray::Array2<f64> {
    let mut x = ndarray::Array2::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x[[i, j]] = v;
        }
    }
    x
}

// --- evaluate ----------------------------------------------------------

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
struct EvaluateArgs {
    /// Event manifest (JSON lines, as written by `synth`)
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory for report, CSVs, cache, and run log
    #[arg(long)]
    out: Option<PathBuf>,
    /// Modalities to evaluate [default: accel,audio]
    #[arg(long, value_delimiter = ',')]
    modalities: Option<Vec<String>>,
    /// Classifier families to evaluate [default: lr,svm,mlp]
    #[arg(long, value_delimiter = ',')]
    classifiers: Option<Vec<String>>,
    /// Accelerometer frame lengths in samples [default: 16,32,64]
    #[arg(long, value_delimiter = ',')]
    accel_frame_lens: Option<Vec<usize>>,
    /// Accelerometer segment counts [default: 5,10]
    #[arg(long, value_delimiter = ',')]
    accel_segment_counts: Option<Vec<usize>>,
    /// Cepstral coefficient counts [default: 13,26,39,52,65]
    #[arg(long, value_delimiter = ',')]
    mfcc_counts: Option<Vec<usize>>,
    /// Audio frame lengths in samples [default: 256,512,1024,2048,4096]
    #[arg(long, value_delimiter = ',')]
    audio_frame_lens: Option<Vec<usize>>,
    /// Audio segment counts [default: 50,70,100,120,150]
    #[arg(long, value_delimiter = ',')]
    audio_segment_counts: Option<Vec<usize>>,
    /// Regularisation strengths for lr and svm [default: 1e-7,…,1e7]
    #[arg(long, value_delimiter = ',')]
    strengths: Option<Vec<f64>>,
    /// Lasso mixing weights for lr [default: 0,0.05,…,1]
    #[arg(long, value_delimiter = ',')]
    l1_ratios: Option<Vec<f64>>,
    /// Ridge mixing weights for lr [default: 0,0.05,…,1]
    #[arg(long, value_delimiter = ',')]
    l2_ratios: Option<Vec<f64>>,
    /// RBF kernel coefficients for svm [default: 1e-7,…,1e7]
    #[arg(long, value_delimiter = ',')]
    kernel_coefs: Option<Vec<f64>>,
    /// Weight penalties for mlp [default: 0,0.05,…,1]
    #[arg(long, value_delimiter = ',')]
    mlp_l2_penalties: Option<Vec<f64>>,
    /// Hidden-layer widths for mlp [default: 10,20,…,100]
    #[arg(long, value_delimiter = ',')]
    neuron_counts: Option<Vec<usize>>,
    /// Neighbours used by the minority oversampler [default: 5]
    #[arg(long)]
    smote_k: Option<usize>,
    /// Base seed; per-fold, per-candidate seeds derive from it [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Points on the averaged ROC grid [default: 101]
    #[arg(long)]
    roc_grid: Option<usize>,
    /// Score cut for sensitivity/specificity/accuracy [default: 0.5]
    #[arg(long)]
    threshold: Option<f64>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// Feature-matrix cache directory [default: <out>/feature_cache]
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// TOML file whose keys mirror the long flags
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl EvaluateArgs {
    fn merged_with(mut self, file: Self) -> Self {
        self.manifest = self.manifest.or(file.manifest);
        self.out = self.out.or(file.out);
        self.modalities = self.modalities.or(file.modalities);
        self.classifiers = self.classifiers.or(file.classifiers);
        self.accel_frame_lens = self.accel_frame_lens.or(file.accel_frame_lens);
        self.accel_segment_counts = self.accel_segment_counts.or(file.accel_segment_counts);
        self.mfcc_counts = self.mfcc_counts.or(file.mfcc_counts);
        self.audio_frame_lens = self.audio_frame_lens.or(file.audio_frame_lens);
        self.audio_segment_counts = self.audio_segment_counts.or(file.audio_segment_counts);
        self.strengths = self.strengths.or(file.strengths);
        self.l1_ratios = self.l1_ratios.or(file.l1_ratios);
        self.l2_ratios = self.l2_ratios.or(file.l2_ratios);
        self.kernel_coefs = self.kernel_coefs.or(file.kernel_coefs);
        self.mlp_l2_penalties = self.mlp_l2_penalties.or(file.mlp_l2_penalties);
        self.neuron_counts = self.neuron_counts.or(file.neuron_counts);
        self.smote_k = self.smote_k.or(file.smote_k);
        self.seed = self.seed.or(file.seed);
        self.roc_grid = self.roc_grid.or(file.roc_grid);
        self.threshold = self.threshold.or(file.threshold);
        self.threads = self.threads.or(file.threads);
        self.cache_dir = self.cache_dir.or(file.cache_dir);
        self
    }
}

fn validated_list(values: Vec<String>, allowed: &[&str], what: &str) -> CliResult<Vec<String>> {
    if values.is_empty() {
        return Err(usage(format!("{what} list is empty")));
    }
    for v in &values {
        if !allowed.contains(&v.as_str()) {
            return Err(usage(format!(
                "unknown {what} {v:?} (expected one of: {})",
                allowed.join(", ")
            )));
        }
    }
    let mut seen = Vec::new();
    for v in &values {
        if seen.contains(v) {
            return Err(usage(format!("{what} {v:?} given twice")));
        }
        seen.push(v.clone());
    }
    Ok(values)
}

#[derive(Serialize)]
struct ResolvedEvaluate {
    manifest: PathBuf,
    out: PathBuf,
    modalities: Vec<String>,
    classifiers: Vec<String>,
    grids: Grids,
    /// True when any grid list differs from the full built-in tables.
    grid_truncated: bool,
    candidate_counts: BTreeMap<String, usize>,
    options: EvalOptions,
    /// Recorded here because it is deliberately absent from serialized
    /// options: the cache location must not affect report bytes.
    cache_dir: PathBuf,
    threads: Option<usize>,
}

fn cmd_evaluate(args: EvaluateArgs) -> CliResult<()> {
    let file = load_config(args.config.as_deref())?;
    let a = args.merged_with(file);
    let manifest_path = require(a.manifest, "--manifest <file>")?;
    let out = require(a.out, "--out <dir>")?;

    let modalities = validated_list(
        a.modalities
            .unwrap_or_else(|| vec!["accel".into(), "audio".into()]),
        &["accel", "audio"],
        "modality",
    )?;
    let classifiers = validated_list(
        a.classifiers
            .unwrap_or_else(|| vec!["lr".into(), "svm".into(), "mlp".into()]),
        &["lr", "svm", "mlp"],
        "classifier",
    )?;
    let grids = Grids {
        accel_frame_lens: a.accel_frame_lens.unwrap_or_else(grids::default_accel_frame_lens),
        accel_segment_counts: a
            .accel_segment_counts
            .unwrap_or_else(grids::default_accel_segment_counts),
        mfcc_counts: a.mfcc_counts.unwrap_or_else(grids::default_mfcc_counts),
        audio_frame_lens: a.audio_frame_lens.unwrap_or_else(grids::default_audio_frame_lens),
        audio_segment_counts: a
            .audio_segment_counts
            .unwrap_or_else(grids::default_audio_segment_counts),
        strengths: a.strengths.unwrap_or_else(grids::default_strengths),
        l1_ratios: a.l1_ratios.unwrap_or_else(grids::default_ratios),
        l2_ratios: a.l2_ratios.unwrap_or_else(grids::default_ratios),
        kernel_coefs: a.kernel_coefs.unwrap_or_else(grids::default_strengths),
        mlp_l2_penalties: a.mlp_l2_penalties.unwrap_or_else(grids::default_ratios),
        neuron_counts: a.neuron_counts.unwrap_or_else(grids::default_neuron_counts),
    };

    if a.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    if let Some(n) = a.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Pipeline(format!("thread pool: {e}")))?;
    }

    let manifest = read_manifest(&manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let events = load_events(&manifest, base)?;

    let cache_dir = a.cache_dir.unwrap_or_else(|| out.join("feature_cache"));
    let opts = EvalOptions {
        seed: a.seed.unwrap_or(0),
        smote_k: a.smote_k.unwrap_or(5),
        roc_grid: a.roc_grid.unwrap_or(101),
        threshold: a.threshold.unwrap_or(0.5),
        cache_dir: Some(cache_dir.clone()),
    };
    let rows = grids.rows(&modalities, &classifiers);
    let candidate_counts: BTreeMap<String, usize> = rows
        .iter()
        .map(|r| (r.id.clone(), r.candidates.len()))
        .collect();

    let folds = make_folds(&events)?;
    eprintln!(
        "{} events, {} folds, {} rows ({} candidates total)",
        events.len(),
        folds.len(),
        rows.len(),
        rows.iter().map(|r| r.candidates.len()).sum::<usize>()
    );

    let started = Instant::now();
    let mut timings = BTreeMap::new();
    let mut row_results = Vec::with_capacity(rows.len());
    for row in &rows {
        let row_started = Instant::now();
        let result = run_row(&events, &folds, row, &opts)?;
        let elapsed = row_started.elapsed().as_secs_f64();
        eprintln!(
            "row {}: AUC {:.4} +/- {:.4} [{}] ({elapsed:.1}s)",
            result.id,
            result.mean_auc,
            result.std_auc,
            result.representative.describe()
        );
        timings.insert(format!("row {}", row.id), elapsed);
        row_results.push(result);
    }
    timings.insert("total".to_string(), started.elapsed().as_secs_f64());

    let mut patients: Vec<String> = folds.iter().map(|f| f.test_patient.clone()).collect();
    patients.sort();
    let report = EvalReport {
        options: opts.clone(),
        patients,
        event_count: events.len(),
        rows: row_results,
    };

    report.save_json(&out.join("report.json"))?;
    write_csv_artifacts(&report, &out)?;
    write_run_log(
        &out.join("run_log.json"),
        &RunLog {
            command: "evaluate",
            version: VERSION,
            config: ResolvedEvaluate {
                manifest: manifest_path,
                out: out.clone(),
                modalities,
                classifiers,
                grid_truncated: grids.truncated(),
                grids,
                candidate_counts,
                options: opts,
                cache_dir,
                threads: a.threads,
            },
            timings_s: timings,
        },
    )?;
    println!("{}", out.join("report.json").display());
    Ok(())
}

// --- report ------------------------------------------------------------

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
struct ReportArgs {
    /// Saved evaluation report (report.json)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Directory to write results.csv and mean_roc.csv into
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file whose keys mirror the long flags
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl ReportArgs {
    fn merged_with(mut self, file: Self) -> Self {
        self.report = self.report.or(file.report);
        self.out = self.out.or(file.out);
        self
    }
}

#[derive(Serialize)]
struct ResolvedReport {
    report: PathBuf,
    out: PathBuf,
}

fn cmd_report(args: ReportArgs) -> CliResult<()> {
    let file = load_config(args.config.as_deref())?;
    let a = args.merged_with(file);
    let report_path = require(a.report, "--report <file>")?;
    let out = require(a.out, "--out <dir>")?;

    let started = Instant::now();
    let text = std::fs::read_to_string(&report_path)
        .map_err(|e| CliError::Pipeline(format!("cannot read {}: {e}", report_path.display())))?;
    let report: EvalReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Pipeline(format!("{}: not a report: {e}", report_path.display())))?;

    atomic_write(&out.join("results.csv"), results_csv(&report).as_bytes())?;
    atomic_write(&out.join("mean_roc.csv"), mean_roc_csv(&report).as_bytes())?;
    // A distinct log name so re-emitting into an evaluation directory never
    // clobbers the evaluation's own run log.
    write_run_log(
        &out.join("report_run_log.json"),
        &RunLog {
            command: "report",
            version: VERSION,
            config: ResolvedReport {
                report: report_path,
                out: out.clone(),
            },
            timings_s: BTreeMap::from([("total".to_string(), started.elapsed().as_secs_f64())]),
        },
    )?;
    eprintln!("{} rows re-emitted", report.rows.len());
    println!("{}", out.join("results.csv").display());
    Ok(())
}
