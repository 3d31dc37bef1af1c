//! Patient-held-out evaluation: fold construction, per-fold hyperparameter
//! selection, and report aggregation.
//!
//! Events are grouped by patient. Each fold holds one patient out for
//! testing, uses the next patient (in sorted patient order, cyclically) as
//! the development set for hyperparameter selection, and trains on everyone
//! else. Within a fold every candidate — a feature configuration paired
//! with a classifier configuration — is trained on the balanced training
//! set and scored on the development patient; the candidate with the best
//! development AUC wins and its already-fitted model scores the held-out
//! patient. Oversampling, standardization, and every other data-dependent
//! choice happen strictly inside the training split, and each fold records
//! the event ids that fed them so leakage is checkable after the fact.
//!
//! Candidates that cannot run (a frame longer than the shortest event, an
//! oversampler without enough minority rows, a degenerate filterbank) are
//! skipped with a note rather than failing the run, as long as at least one
//! candidate per fold survives.

pub mod metrics;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{smote, SmoteConfig};
use crate::classifiers::{train, ClassifierSpec, TrainedModel};
use crate::error::{Error, Result};
use crate::features::accel::{extract_accel_features, AccelFeatureConfig};
use crate::features::audio::{AudioFeatureConfig, AudioFeatureExtractor};
use crate::features::{FeatureMatrix, Modality};
use crate::signal::{Event, Label};
use metrics::{mean_and_std, mean_roc, roc_curve, Confusion, RocCurve};

/// Feature extraction settings for one modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "modality", rename_all = "snake_case")]
pub enum FeatureConfig {
    Accel(AccelFeatureConfig),
    Audio(AudioFeatureConfig),
}

impl FeatureConfig {
    pub fn describe(&self) -> String {
        match self {
            FeatureConfig::Accel(c) => {
                format!("accel(frame={}, segments={})", c.frame_len, c.segments)
            }
            FeatureConfig::Audio(c) => format!(
                "audio(mfcc={}, frame={}, segments={})",
                c.mfcc_count, c.frame_len, c.segments
            ),
        }
    }

    pub fn modality(&self) -> Modality {
        match self {
            FeatureConfig::Accel(_) => Modality::Accel,
            FeatureConfig::Audio(_) => Modality::Audio,
        }
    }

    /// Matrix shape every event must produce under this configuration.
    fn expected_shape(&self) -> (usize, usize) {
        match self {
            FeatureConfig::Accel(c) => (c.segments, c.feature_cols()),
            FeatureConfig::Audio(c) => (c.segments, c.feature_cols()),
        }
    }
}

/// One grid point: a feature configuration paired with a classifier
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub features: FeatureConfig,
    pub classifier: ClassifierSpec,
}

impl Candidate {
    pub fn describe(&self) -> String {
        format!("{} on {}", self.classifier.describe(), self.features.describe())
    }
}

/// A report row: one named candidate set evaluated under the full fold
/// protocol (typically one classifier family on one modality).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSpec {
    pub id: String,
    pub candidates: Vec<Candidate>,
}

/// Run-wide evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Base seed; per-fold, per-candidate seeds are mixed from it.
    pub seed: u64,
    /// Neighbours used by the minority oversampler.
    pub smote_k: usize,
    /// Points on the averaged ROC grid.
    pub roc_grid: usize,
    /// Score cut for the confusion-matrix metrics (sensitivity,
    /// specificity, accuracy). The ROC and AUC do not depend on it.
    pub threshold: f64,
    /// When set, per-event feature matrices are kept on disk under this
    /// directory, keyed by feature configuration and event id, so repeated
    /// runs skip re-extraction. A machine-local execution detail, not part
    /// of the run's identity, so it never enters serialized reports.
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            seed: 0,
            smote_k: 5,
            roc_grid: 101,
            threshold: 0.5,
            cache_dir: None,
        }
    }
}

/// Index sets for one fold, all referring to positions in the event slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub index: usize,
    pub test_patient: String,
    pub dev_patient: String,
    pub train_patients: Vec<String>,
    pub test: Vec<usize>,
    pub dev: Vec<usize>,
    pub train: Vec<usize>,
}

/// Builds leave-one-patient-out folds: fold `i` tests patient `i` (sorted
/// order) and develops on patient `i + 1`, wrapping around. Needs at least
/// three patients so the training set is never empty.
pub fn make_folds(events: &[Event]) -> Result<Vec<FoldPlan>> {
    let mut by_patient: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in events.iter().enumerate() {
        by_patient.entry(e.patient_id.as_str()).or_default().push(i);
    }
    let patients: Vec<&str> = by_patient.keys().copied().collect();
    if patients.len() < 3 {
        return Err(Error::input(format!(
            "patient-held-out folds need at least 3 patients, got {}",
            patients.len()
        )));
    }

    let mut folds = Vec::with_capacity(patients.len());
    for (i, &test_patient) in patients.iter().enumerate() {
        let dev_patient = patients[(i + 1) % patients.len()];
        let mut plan = FoldPlan {
            index: i,
            test_patient: test_patient.to_string(),
            dev_patient: dev_patient.to_string(),
            train_patients: Vec::new(),
            test: by_patient[test_patient].clone(),
            dev: by_patient[dev_patient].clone(),
            train: Vec::new(),
        };
        for &p in &patients {
            if p != test_patient && p != dev_patient {
                plan.train_patients.push(p.to_string());
                plan.train.extend_from_slice(&by_patient[p]);
            }
        }
        folds.push(plan);
    }
    Ok(folds)
}

/// Event ids that fed each data-dependent step of one fold, for after-the-
/// fact leakage checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldTrace {
    pub train_events: Vec<String>,
    pub dev_events: Vec<String>,
    pub test_events: Vec<String>,
    /// Ids whose rows entered the minority oversampler.
    pub oversample_inputs: Vec<String>,
    /// Ids whose rows set the standardization statistics.
    pub standardization_inputs: Vec<String>,
}

/// Development-set outcome of one candidate in one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub candidate: String,
    /// Development AUC; absent when the candidate could not run.
    pub dev_auc: Option<f64>,
    /// Why the candidate was skipped, when it was.
    pub note: Option<String>,
}

/// Everything measured on one held-out patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_patient: String,
    pub dev_patient: String,
    pub chosen_index: usize,
    pub chosen: String,
    pub dev_auc: f64,
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub roc: RocCurve,
    pub candidates: Vec<CandidateOutcome>,
    pub trace: FoldTrace,
}

/// One report row aggregated over all folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub id: String,
    pub candidates: Vec<String>,
    pub folds: Vec<FoldResult>,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub mean_sensitivity: f64,
    pub mean_specificity: f64,
    pub mean_accuracy: f64,
    /// The chosen candidate with the best mean test AUC across the folds
    /// that chose it — the single configuration a report would headline.
    pub representative: Candidate,
    pub mean_roc: Vec<(f64, f64)>,
}

/// Full evaluation output, self-describing enough to reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub options: EvalOptions,
    pub patients: Vec<String>,
    pub event_count: usize,
    pub rows: Vec<RowResult>,
}

impl EvalReport {
    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        crate::io::atomic_write(path, json.as_bytes())
    }
}

/// Per-config feature matrices over the whole corpus. A configuration that
/// fails on any event is recorded as unavailable with the reason; folds then
/// skip candidates that reference it.
struct FeatureStore {
    matrices: Vec<std::result::Result<Array2<f64>, String>>,
    keys: Vec<String>,
}

impl FeatureStore {
    fn build(events: &[Event], configs: &[FeatureConfig], cache_root: Option<&Path>) -> Self {
        let mut matrices = Vec::with_capacity(configs.len());
        let mut keys = Vec::with_capacity(configs.len());
        for cfg in configs {
            keys.push(cfg.describe());
            matrices.push(Self::build_one(events, cfg, cache_root));
        }
        FeatureStore { matrices, keys }
    }

    /// Directory holding the cached matrices of one configuration: the
    /// modality plus a hash of the configuration's serialized form.
    fn cache_dir_for(root: &Path, cfg: &FeatureConfig) -> PathBuf {
        let json = serde_json::to_string(cfg).unwrap_or_default();
        root.join(format!(
            "{}-{:016x}",
            cfg.modality(),
            crate::io::fnv1a64(json.as_bytes())
        ))
    }

    fn cache_file_for(dir: &Path, event_id: &str) -> PathBuf {
        dir.join(format!("{}.fmat", crate::io::safe_file_stem(event_id)))
    }

    fn build_one(
        events: &[Event],
        cfg: &FeatureConfig,
        cache_root: Option<&Path>,
    ) -> std::result::Result<Array2<f64>, String> {
        let cache_dir = cache_root.map(|root| Self::cache_dir_for(root, cfg));
        let (want_rows, want_cols) = cfg.expected_shape();
        let cached = |id: &str| -> Option<Vec<f64>> {
            let dir = cache_dir.as_deref()?;
            let m = FeatureMatrix::read_binary(&Self::cache_file_for(dir, id), cfg.modality()).ok()?;
            (m.rows() == want_rows && m.cols() == want_cols).then(|| m.flatten())
        };
        // Cache writes are best effort: a failed write only costs a
        // recomputation on the next run.
        let remember = |id: &str, m: &FeatureMatrix| {
            if let Some(dir) = cache_dir.as_deref() {
                let _ = m.write_binary(&Self::cache_file_for(dir, id));
            }
        };

        let rows: Vec<Vec<f64>> = match cfg {
            FeatureConfig::Accel(c) => events
                .par_iter()
                .map(|e| {
                    if let Some(row) = cached(&e.id) {
                        return Ok(row);
                    }
                    extract_accel_features(e, c)
                        .map(|m| {
                            remember(&e.id, &m);
                            m.flatten()
                        })
                        .map_err(|err| format!("event {}: {err}", e.id))
                })
                .collect::<std::result::Result<_, _>>()?,
            FeatureConfig::Audio(c) => {
                let extractor = AudioFeatureExtractor::new(*c).map_err(|e| e.to_string())?;
                events
                    .par_iter()
                    .map(|e| {
                        if let Some(row) = cached(&e.id) {
                            return Ok(row);
                        }
                        extractor
                            .extract(e)
                            .map(|m| {
                                remember(&e.id, &m);
                                m.flatten()
                            })
                            .map_err(|err| format!("event {}: {err}", e.id))
                    })
                    .collect::<std::result::Result<_, _>>()?
            }
        };
        let d = rows.first().map_or(0, |r| r.len());
        let mut m = Array2::zeros((rows.len(), d));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(format!("inconsistent feature width at row {i}"));
            }
            for (j, &v) in row.iter().enumerate() {
                m[[i, j]] = v;
            }
        }
        Ok(m)
    }

    fn index_of(&self, cfg: &FeatureConfig) -> usize {
        let key = cfg.describe();
        self.keys.iter().position(|k| *k == key).expect("config was registered")
    }

    fn gather(
        &self,
        cfg_idx: usize,
        indices: &[usize],
    ) -> std::result::Result<Array2<f64>, String> {
        let m = self.matrices[cfg_idx].as_ref().map_err(|e| e.clone())?;
        let d = m.ncols();
        let mut out = Array2::zeros((indices.len(), d));
        for (r, &i) in indices.iter().enumerate() {
            out.row_mut(r).assign(&m.row(i));
        }
        Ok(out)
    }
}

fn labels_of(events: &[Event], indices: &[usize]) -> Vec<bool> {
    indices.iter().map(|&i| events[i].label == Label::Cough).collect()
}

fn ids_of(events: &[Event], indices: &[usize]) -> Vec<String> {
    indices.iter().map(|&i| events[i].id.clone()).collect()
}

/// Deterministic per-(fold, candidate) seed mixed from the base seed.
fn derived_seed(base: u64, fold: usize, candidate: usize) -> u64 {
    base ^ (fold as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (candidate as u64 + 1).wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

struct FittedCandidate {
    model: TrainedModel,
    dev_auc: f64,
    oversampled: bool,
}

/// Trains one candidate on the fold's training split and scores the
/// development split. Any failure is reported as a skip reason.
fn try_candidate(
    events: &[Event],
    store: &FeatureStore,
    fold: &FoldPlan,
    candidate: &Candidate,
    seed: u64,
    smote_k: usize,
) -> std::result::Result<FittedCandidate, String> {
    let cfg_idx = store.index_of(&candidate.features);
    let x_train = store.gather(cfg_idx, &fold.train)?;
    let y_train = labels_of(events, &fold.train);

    let external = matches!(candidate.classifier, ClassifierSpec::External { .. });
    let (x_bal, y_bal, oversampled) = if external {
        (x_train, y_train, false)
    } else {
        let cfg = SmoteConfig {
            k_neighbors: smote_k,
            target: None,
            seed: seed ^ 0x51ED_0C0F_FEE5_EED5,
        };
        let (x, y) = smote(&x_train, &y_train, &cfg).map_err(|e| e.to_string())?;
        (x, y, true)
    };

    let model =
        train(&candidate.classifier, &x_bal.view(), &y_bal, seed).map_err(|e| e.to_string())?;

    let x_dev = store.gather(cfg_idx, &fold.dev)?;
    let dev_ids = ids_of(events, &fold.dev);
    let dev_scores = model
        .score_events(&x_dev.view(), &dev_ids)
        .map_err(|e| e.to_string())?;
    let dev_labels = labels_of(events, &fold.dev);
    let dev_auc = roc_curve(&dev_scores, &dev_labels)
        .map_err(|e| format!("dev patient {}: {e}", fold.dev_patient))?
        .auc;

    Ok(FittedCandidate {
        model,
        dev_auc,
        oversampled,
    })
}

fn eval_fold(
    events: &[Event],
    store: &FeatureStore,
    fold: &FoldPlan,
    row: &RowSpec,
    opts: &EvalOptions,
) -> Result<FoldResult> {
    let mut outcomes = Vec::with_capacity(row.candidates.len());
    let mut best: Option<(usize, FittedCandidate)> = None;

    for (ci, candidate) in row.candidates.iter().enumerate() {
        let seed = derived_seed(opts.seed, fold.index, ci);
        match try_candidate(events, store, fold, candidate, seed, opts.smote_k) {
            Ok(fitted) => {
                outcomes.push(CandidateOutcome {
                    candidate: candidate.describe(),
                    dev_auc: Some(fitted.dev_auc),
                    note: None,
                });
                let better = match &best {
                    Some((_, b)) => fitted.dev_auc > b.dev_auc,
                    None => true,
                };
                if better {
                    best = Some((ci, fitted));
                }
            }
            Err(reason) => outcomes.push(CandidateOutcome {
                candidate: candidate.describe(),
                dev_auc: None,
                note: Some(reason),
            }),
        }
    }

    let (chosen_index, fitted) = best.ok_or_else(|| {
        Error::input(format!(
            "fold {} ({} held out): no candidate could run; first note: {}",
            fold.index,
            fold.test_patient,
            outcomes
                .iter()
                .find_map(|o| o.note.clone())
                .unwrap_or_default()
        ))
    })?;
    let candidate = &row.candidates[chosen_index];

    let cfg_idx = store.index_of(&candidate.features);
    let x_test = store
        .gather(cfg_idx, &fold.test)
        .map_err(Error::input)?;
    let test_ids = ids_of(events, &fold.test);
    let test_labels = labels_of(events, &fold.test);
    let scores = fitted.model.score_events(&x_test.view(), &test_ids)?;
    let curve = roc_curve(&scores, &test_labels)
        .map_err(|e| Error::input(format!("test patient {}: {e}", fold.test_patient)))?;
    let confusion = Confusion::from_scores(&scores, &test_labels, opts.threshold);

    let trace = FoldTrace {
        train_events: ids_of(events, &fold.train),
        dev_events: ids_of(events, &fold.dev),
        test_events: test_ids,
        oversample_inputs: if fitted.oversampled {
            ids_of(events, &fold.train)
        } else {
            Vec::new()
        },
        standardization_inputs: if fitted.model.standardizer.is_some() {
            ids_of(events, &fold.train)
        } else {
            Vec::new()
        },
    };

    Ok(FoldResult {
        fold: fold.index,
        test_patient: fold.test_patient.clone(),
        dev_patient: fold.dev_patient.clone(),
        chosen_index,
        chosen: candidate.describe(),
        dev_auc: fitted.dev_auc,
        auc: curve.auc,
        sensitivity: confusion.sensitivity(),
        specificity: confusion.specificity(),
        accuracy: confusion.accuracy(),
        roc: curve,
        candidates: outcomes,
        trace,
    })
}

/// Evaluates one row across all folds (folds run in parallel) and
/// aggregates the per-fold metrics.
pub fn run_row(
    events: &[Event],
    folds: &[FoldPlan],
    row: &RowSpec,
    opts: &EvalOptions,
) -> Result<RowResult> {
    if row.candidates.is_empty() {
        return Err(Error::config(format!("row {} has no candidates", row.id)));
    }
    let mut configs: Vec<FeatureConfig> = Vec::new();
    for c in &row.candidates {
        if !configs.iter().any(|f| f.describe() == c.features.describe()) {
            configs.push(c.features.clone());
        }
    }
    let store = FeatureStore::build(events, &configs, opts.cache_dir.as_deref());

    let fold_results: Vec<FoldResult> = folds
        .par_iter()
        .map(|fold| eval_fold(events, &store, fold, row, opts))
        .collect::<Result<Vec<_>>>()?;

    let aucs: Vec<f64> = fold_results.iter().map(|f| f.auc).collect();
    let (mean_auc, std_auc) = mean_and_std(&aucs);
    let mean_of = |pick: fn(&FoldResult) -> f64| {
        fold_results.iter().map(pick).sum::<f64>() / fold_results.len() as f64
    };

    // Headline configuration: among candidates some fold chose, the one
    // with the best mean test AUC over its folds; first-chosen wins ties.
    let mut per_chosen: Vec<(usize, f64, usize)> = Vec::new();
    for f in &fold_results {
        match per_chosen.iter_mut().find(|(ci, _, _)| *ci == f.chosen_index) {
            Some((_, sum, count)) => {
                *sum += f.auc;
                *count += 1;
            }
            None => per_chosen.push((f.chosen_index, f.auc, 1)),
        }
    }
    let mut rep_index = per_chosen[0].0;
    let mut rep_mean = per_chosen[0].1 / per_chosen[0].2 as f64;
    for &(ci, sum, count) in &per_chosen[1..] {
        let mean = sum / count as f64;
        if mean > rep_mean {
            rep_mean = mean;
            rep_index = ci;
        }
    }
    let representative = row.candidates[rep_index].clone();

    let curves: Vec<RocCurve> = fold_results.iter().map(|f| f.roc.clone()).collect();
    let mean_roc = mean_roc(&curves, opts.roc_grid);

    Ok(RowResult {
        id: row.id.clone(),
        candidates: row.candidates.iter().map(|c| c.describe()).collect(),
        mean_auc,
        std_auc,
        mean_sensitivity: mean_of(|f| f.sensitivity),
        mean_specificity: mean_of(|f| f.specificity),
        mean_accuracy: mean_of(|f| f.accuracy),
        representative,
        mean_roc,
        folds: fold_results,
    })
}

/// Runs every row under the same fold plan and assembles the report.
pub fn run_report(events: &[Event], rows: &[RowSpec], opts: &EvalOptions) -> Result<EvalReport> {
    let folds = make_folds(events)?;
    let mut row_results = Vec::with_capacity(rows.len());
    for row in rows {
        row_results.push(run_row(events, &folds, row, opts)?);
    }
    let mut patients: Vec<String> = folds.iter().map(|f| f.test_patient.clone()).collect();
    patients.sort();
    Ok(EvalReport {
        options: opts.clone(),
        patients,
        event_count: events.len(),
        rows: row_results,
    })
}
