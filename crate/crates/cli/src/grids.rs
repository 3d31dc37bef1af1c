//! Search-grid defaults and evaluation-row assembly.
//!
//! The built-in grids are the full search tables: three accelerometer frame
//! lengths by two segment counts; five MFCC counts by five audio frame
//! lengths by five segment counts; regularisation strengths and kernel
//! coefficients as powers of ten from 1e-7 to 1e7; mixing ratios and l2
//! penalties from 0 to 1 in steps of 0.05; hidden-layer widths from 10 to
//! 100 in steps of 10. The full cross-product is enormous — grid flags
//! exist precisely so desk-scale runs can truncate it, and the run log
//! records whether the resolved grid differs from the defaults.

use coughsense::classifiers::ClassifierSpec;
use coughsense::evaluation::{Candidate, FeatureConfig, RowSpec};
use coughsense::features::accel::AccelFeatureConfig;
use coughsense::features::audio::AudioFeatureConfig;

pub fn default_accel_frame_lens() -> Vec<usize> {
    vec![16, 32, 64]
}

pub fn default_accel_segment_counts() -> Vec<usize> {
    vec![5, 10]
}

pub fn default_mfcc_counts() -> Vec<usize> {
    vec![13, 26, 39, 52, 65]
}

pub fn default_audio_frame_lens() -> Vec<usize> {
    vec![256, 512, 1024, 2048, 4096]
}

pub fn default_audio_segment_counts() -> Vec<usize> {
    vec![50, 70, 100, 120, 150]
}

/// Powers of ten from 1e-7 to 1e7, shared by the logistic-regression and
/// SVM strength grids and the SVM kernel-coefficient grid.
pub fn default_strengths() -> Vec<f64> {
    (-7..=7).map(|e| 10f64.powi(e)).collect()
}

/// 0, 0.05, …, 1.
pub fn default_ratios() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

/// 10, 20, …, 100.
pub fn default_neuron_counts() -> Vec<usize> {
    (1..=10).map(|i| i * 10).collect()
}

/// Fully resolved search grids for one `evaluate` run.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Grids {
    pub accel_frame_lens: Vec<usize>,
    pub accel_segment_counts: Vec<usize>,
    pub mfcc_counts: Vec<usize>,
    pub audio_frame_lens: Vec<usize>,
    pub audio_segment_counts: Vec<usize>,
    pub strengths: Vec<f64>,
    pub l1_ratios: Vec<f64>,
    pub l2_ratios: Vec<f64>,
    pub kernel_coefs: Vec<f64>,
    pub mlp_l2_penalties: Vec<f64>,
    pub neuron_counts: Vec<usize>,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            accel_frame_lens: default_accel_frame_lens(),
            accel_segment_counts: default_accel_segment_counts(),
            mfcc_counts: default_mfcc_counts(),
            audio_frame_lens: default_audio_frame_lens(),
            audio_segment_counts: default_audio_segment_counts(),
            strengths: default_strengths(),
            l1_ratios: default_ratios(),
            l2_ratios: default_ratios(),
            kernel_coefs: default_strengths(),
            mlp_l2_penalties: default_ratios(),
            neuron_counts: default_neuron_counts(),
        }
    }
}

impl Grids {
    /// Whether any list differs from the built-in full table.
    pub fn truncated(&self) -> bool {
        *self != Grids::default()
    }

    fn feature_configs(&self, modality: &str) -> Vec<FeatureConfig> {
        match modality {
            "accel" => {
                let mut out = Vec::new();
                for &frame_len in &self.accel_frame_lens {
                    for &segments in &self.accel_segment_counts {
                        out.push(FeatureConfig::Accel(AccelFeatureConfig {
                            frame_len,
                            segments,
                        }));
                    }
                }
                out
            }
            "audio" => {
                let mut out = Vec::new();
                for &mfcc in &self.mfcc_counts {
                    for &frame_len in &self.audio_frame_lens {
                        for &segments in &self.audio_segment_counts {
                            out.push(FeatureConfig::Audio(AudioFeatureConfig::new(
                                mfcc, frame_len, segments,
                            )));
                        }
                    }
                }
                out
            }
            other => unreachable!("modality {other} is validated before grid assembly"),
        }
    }

    fn classifier_specs(&self, family: &str) -> Vec<ClassifierSpec> {
        match family {
            "lr" => {
                let mut out = Vec::new();
                for &strength in &self.strengths {
                    for &l1 in &self.l1_ratios {
                        for &l2 in &self.l2_ratios {
                            out.push(ClassifierSpec::LogisticRegression {
                                strength,
                                l1_weight: l1,
                                l2_weight: l2,
                            });
                        }
                    }
                }
                out
            }
            "svm" => {
                let mut out = Vec::new();
                for &strength in &self.strengths {
                    for &kernel_coef in &self.kernel_coefs {
                        out.push(ClassifierSpec::Svm {
                            strength,
                            kernel_coef,
                        });
                    }
                }
                out
            }
            "mlp" => {
                let mut out = Vec::new();
                for &l2 in &self.mlp_l2_penalties {
                    for &hidden in &self.neuron_counts {
                        out.push(ClassifierSpec::Mlp { l2, hidden });
                    }
                }
                out
            }
            other => unreachable!("classifier {other} is validated before grid assembly"),
        }
    }

    /// One evaluation row per (modality, classifier family), its candidates
    /// the feature-grid × classifier-grid cross product in grid order
    /// (features outer, classifier inner) so tie-breaking is reproducible.
    pub fn rows(&self, modalities: &[String], classifiers: &[String]) -> Vec<RowSpec> {
        let mut rows = Vec::new();
        for modality in modalities {
            let features = self.feature_configs(modality);
            for family in classifiers {
                let specs = self.classifier_specs(family);
                let mut candidates = Vec::with_capacity(features.len() * specs.len());
                for f in &features {
                    for s in &specs {
                        candidates.push(Candidate {
                            features: f.clone(),
                            classifier: s.clone(),
                        });
                    }
                }
                rows.push(RowSpec {
                    id: format!("{modality}-{family}"),
                    candidates,
                });
            }
        }
        rows
    }
}
