//! Classifiers scoring flattened event feature vectors as cough
//! probabilities.
//!
//! Three families are trained from scratch on standardized inputs: an
//! elastic-net logistic regression, an RBF-kernel SVM with sigmoid score
//! calibration, and a single-hidden-layer rectifier network. A fourth
//! `external` kind wraps a file of pre-computed per-event scores so systems
//! trained elsewhere can be evaluated under the exact same protocol.
//!
//! Every trainer standardizes columns to zero mean and unit variance using
//! training statistics only; the statistics travel with the model so scoring
//! applies the identical transform.

pub mod logreg;
pub mod mlp;
pub mod svm;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::atomic_write;

/// Current on-disk model format.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A classifier family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    /// Elastic-net logistic regression. `strength` scales the whole penalty
    /// down (penalty is divided by it); `l1_weight` and `l2_weight` set the
    /// relative mix and are normalized to sum to one internally.
    LogisticRegression {
        strength: f64,
        l1_weight: f64,
        l2_weight: f64,
    },
    /// Soft-margin SVM with kernel `exp(-kernel_coef * |a - b|^2)`;
    /// `strength` is the box constraint C.
    Svm { strength: f64, kernel_coef: f64 },
    /// One hidden rectifier layer of `hidden` units with a logistic output;
    /// `l2` penalizes both weight matrices.
    Mlp { l2: f64, hidden: usize },
    /// Pre-computed scores keyed by event id, loaded from a JSON file.
    External { scores_path: PathBuf },
}

impl ClassifierSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ClassifierSpec::LogisticRegression { .. } => "lr",
            ClassifierSpec::Svm { .. } => "svm",
            ClassifierSpec::Mlp { .. } => "mlp",
            ClassifierSpec::External { .. } => "external",
        }
    }

    /// Compact human-readable hyperparameter summary for reports.
    pub fn describe(&self) -> String {
        match self {
            ClassifierSpec::LogisticRegression {
                strength,
                l1_weight,
                l2_weight,
            } => format!("lr(strength={strength}, l1={l1_weight}, l2={l2_weight})"),
            ClassifierSpec::Svm {
                strength,
                kernel_coef,
            } => format!("svm(C={strength}, kernel_coef={kernel_coef})"),
            ClassifierSpec::Mlp { l2, hidden } => format!("mlp(l2={l2}, hidden={hidden})"),
            ClassifierSpec::External { scores_path } => {
                format!("external({})", scores_path.display())
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ClassifierSpec::LogisticRegression {
                strength,
                l1_weight,
                l2_weight,
            } => {
                if strength <= 0.0 {
                    return Err(Error::config("lr strength must be positive"));
                }
                if l1_weight < 0.0 || l2_weight < 0.0 {
                    return Err(Error::config("lr penalty weights must be non-negative"));
                }
            }
            ClassifierSpec::Svm {
                strength,
                kernel_coef,
            } => {
                if strength <= 0.0 || kernel_coef <= 0.0 {
                    return Err(Error::config("svm strength and kernel_coef must be positive"));
                }
            }
            ClassifierSpec::Mlp { l2, hidden } => {
                if l2 < 0.0 {
                    return Err(Error::config("mlp l2 penalty must be non-negative"));
                }
                if hidden == 0 {
                    return Err(Error::config("mlp needs at least one hidden unit"));
                }
            }
            ClassifierSpec::External { .. } => {}
        }
        Ok(())
    }
}

/// Per-column affine transform fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits column means and population standard deviations. Constant
    /// columns get a unit scale so they map to zero instead of dividing by
    /// zero.
    pub fn fit(x: &ArrayView2<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let d = x.ncols();
        let mut mean = vec![0.0; d];
        let mut std = vec![0.0; d];
        for (j, col) in x.columns().into_iter().enumerate() {
            let mu = col.sum() / n;
            let var = col.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / n;
            mean[j] = mu;
            std[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Standardizer { mean, std }
    }

    pub fn transform(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        out
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }
}

/// Fitted parameters, by family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    Kernel {
        /// Standardized support vectors, one row each.
        support_vectors: Vec<Vec<f64>>,
        /// `alpha_i * y_i` per support vector.
        coefficients: Vec<f64>,
        bias: f64,
        kernel_coef: f64,
        /// Sigmoid calibration: `p = 1 / (1 + exp(a * decision + b))`.
        platt_a: f64,
        platt_b: f64,
    },
    Net {
        /// Hidden weights, `hidden` rows of `dims` values.
        w1: Vec<Vec<f64>>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: f64,
    },
    Lookup {
        scores: BTreeMap<String, f64>,
    },
}

/// A trained classifier ready to score events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ClassifierSpec,
    pub seed: u64,
    pub standardizer: Option<Standardizer>,
    pub params: ModelParams,
}

/// Trains `spec` on flattened feature rows `x` with labels `y`
/// (`true` = cough). Training is deterministic given `(x, y, seed)`.
pub fn train(spec: &ClassifierSpec, x: &ArrayView2<f64>, y: &[bool], seed: u64) -> Result<TrainedModel> {
    spec.validate()?;
    if let ClassifierSpec::External { scores_path } = spec {
        return external_model(spec.clone(), scores_path, seed);
    }

    if x.nrows() != y.len() {
        return Err(Error::input(format!(
            "feature rows ({}) and labels ({}) disagree",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() < 2 {
        return Err(Error::input("training needs at least two rows"));
    }
    let pos = y.iter().filter(|&&v| v).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::input("training needs both classes present"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("training features must be finite"));
    }

    let standardizer = Standardizer::fit(x);
    let xs = standardizer.transform(x);

    let params = match *spec {
        ClassifierSpec::LogisticRegression {
            strength,
            l1_weight,
            l2_weight,
        } => logreg::fit(&xs, y, strength, l1_weight, l2_weight)?,
        ClassifierSpec::Svm {
            strength,
            kernel_coef,
        } => svm::fit(&xs, y, strength, kernel_coef)?.params,
        ClassifierSpec::Mlp { l2, hidden } => mlp::fit(&xs, y, l2, hidden, seed)?,
        ClassifierSpec::External { .. } => unreachable!(),
    };

    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        seed,
        standardizer: Some(standardizer),
        params,
    })
}

fn external_model(spec: ClassifierSpec, scores_path: &Path, seed: u64) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(scores_path).map_err(|e| Error::io(scores_path, e))?;
    let scores: BTreeMap<String, f64> = serde_json::from_str(&text)
        .map_err(|e| Error::load(scores_path, format!("expected an id-to-score map: {e}")))?;
    for (id, &s) in &scores {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::load(
                scores_path,
                format!("score for {id} is {s}, outside [0, 1]"),
            ));
        }
    }
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec,
        seed,
        standardizer: None,
        params: ModelParams::Lookup { scores },
    })
}

impl TrainedModel {
    /// Scores feature rows as cough probabilities in [0, 1]. An empty matrix
    /// scores to an empty list. External models cannot score raw features;
    /// use [`TrainedModel::score_events`].
    pub fn score(&self, x: &ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.nrows() == 0 {
            return Ok(Vec::new());
        }
        let standardizer = match &self.standardizer {
            Some(s) => s,
            None => {
                return Err(Error::input(
                    "an external model scores by event id; call score_events with ids",
                ))
            }
        };
        if x.ncols() != standardizer.dims() {
            return Err(Error::input(format!(
                "model expects {} feature columns, got {}",
                standardizer.dims(),
                x.ncols()
            )));
        }
        let xs = standardizer.transform(x);
        match &self.params {
            ModelParams::Linear { weights, bias } => {
                let w = Array1::from_vec(weights.clone());
                Ok(xs.dot(&w).iter().map(|&z| sigmoid(z + bias)).collect())
            }
            ModelParams::Kernel {
                support_vectors,
                coefficients,
                bias,
                kernel_coef,
                platt_a,
                platt_b,
            } => {
                let mut out = Vec::with_capacity(xs.nrows());
                for row in xs.rows() {
                    let d = svm::decision_value(
                        &row,
                        support_vectors,
                        coefficients,
                        *bias,
                        *kernel_coef,
                    );
                    out.push(sigmoid(-(platt_a * d + platt_b)));
                }
                Ok(out)
            }
            ModelParams::Net { w1, b1, w2, b2 } => Ok(mlp::forward(&xs.view(), w1, b1, w2, *b2)),
            ModelParams::Lookup { .. } => Err(Error::input(
                "an external model scores by event id; call score_events with ids",
            )),
        }
    }

    /// Scores events given their feature rows and ids. Trained families
    /// ignore the ids; external models look scores up by id and fail on any
    /// id missing from their table.
    pub fn score_events(&self, x: &ArrayView2<f64>, ids: &[String]) -> Result<Vec<f64>> {
        match &self.params {
            ModelParams::Lookup { scores } => ids
                .iter()
                .map(|id| {
                    scores.get(id).copied().ok_or_else(|| {
                        Error::input(format!("external scores file has no entry for event {id}"))
                    })
                })
                .collect(),
            _ => self.score(x),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        atomic_write(path, json.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::load(path, format!("not valid JSON: {e}")))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::load(
                    path,
                    format!("model format_version {v} is not supported (expected {MODEL_FORMAT_VERSION})"),
                ))
            }
            None => return Err(Error::load(path, "missing format_version")),
        }
        serde_json::from_value(value).map_err(|e| Error::load(path, format!("malformed model: {e}")))
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(z))` without overflow.
pub fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Largest eigenvalue of `X^T X` by power iteration with a fixed
/// deterministic start vector.
pub(crate) fn spectral_bound(x: &Array2<f64>) -> f64 {
    let d = x.ncols();
    if d == 0 || x.nrows() == 0 {
        return 0.0;
    }
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = Array1::from_shape_fn(d, |_| rng.gen_range(-1.0..1.0f64));
    let mut norm = v.dot(&v).sqrt();
    if norm == 0.0 {
        v[0] = 1.0;
        norm = 1.0;
    }
    v /= norm;
    let mut lambda = 0.0;
    for _ in 0..60 {
        let u = x.dot(&v);
        let w = x.t().dot(&u);
        let new_lambda = w.dot(&v);
        let n = w.dot(&w).sqrt();
        if n == 0.0 {
            return 0.0;
        }
        v = w / n;
        if (new_lambda - lambda).abs() <= 1e-6 * new_lambda.abs().max(1.0) {
            return new_lambda;
        }
        lambda = new_lambda;
    }
    lambda
}

/// Labels as +1/-1 floats.
pub(crate) fn signed_labels(y: &[bool]) -> Array1<f64> {
    Array1::from_iter(y.iter().map(|&v| if v { 1.0 } else { -1.0 }))
}

/// Labels as 1/0 floats.
pub(crate) fn binary_labels(y: &[bool]) -> Array1<f64> {
    Array1::from_iter(y.iter().map(|&v| if v { 1.0 } else { 0.0 }))
}

pub(crate) fn squared_distance(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&p, &q)| (p - q) * (p - q))
        .sum()
}
