//! Accelerometer feature extraction.
//!
//! Each frame contributes its one-sided power spectrum plus four scalar
//! summaries: root mean square, kurtosis, mean, and crest factor. With frame
//! length `psi` and `c` frames per event the matrix is `(c, psi/2 + 5)`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::signal::Event;

use super::{frame_positions, power_spectrum, FeatureMatrix, Modality};

/// Frame layout for the accelerometer channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct AccelFeatureConfig {
    /// Samples per frame; must be a power of two.
    pub frame_len: usize,
    /// Frames extracted per event.
    pub segments: usize,
}

impl Default for AccelFeatureConfig {
    fn default() -> Self {
        AccelFeatureConfig {
            frame_len: 32,
            segments: 10,
        }
    }
}

impl AccelFeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frame_len < 2 || !self.frame_len.is_power_of_two() {
            return Err(Error::config(format!(
                "accel frame_len must be a power of two, got {}",
                self.frame_len
            )));
        }
        if self.segments < 2 {
            return Err(Error::config("accel segments must be at least 2"));
        }
        Ok(())
    }

    /// Number of feature columns: one-sided spectrum plus four summaries.
    pub fn feature_cols(&self) -> usize {
        self.frame_len / 2 + 5
    }
}

/// Root mean square of a frame. Zero for an empty frame.
pub fn rms(frame: &[f64]) -> f64 {
    if frame.is_empty() {
        return 0.0;
    }
    (frame.iter().map(|&x| x * x).sum::<f64>() / frame.len() as f64).sqrt()
}

/// Kurtosis as the moment ratio `m4 / m2^2` (a normal population scores 3).
/// A constant frame has no spread to measure and scores 0 by convention.
pub fn kurtosis(frame: &[f64]) -> f64 {
    if frame.is_empty() || frame.iter().all(|&x| x == frame[0]) {
        return 0.0;
    }
    let n = frame.len() as f64;
    let mean = frame.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &x in frame {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return 0.0;
    }
    m4 / (m2 * m2)
}

/// Mean of the frame (the single-window moving average at frame scale).
pub fn moving_average(frame: &[f64]) -> f64 {
    if frame.is_empty() {
        return 0.0;
    }
    frame.iter().sum::<f64>() / frame.len() as f64
}

/// Peak magnitude over RMS. Zero for an all-zero frame.
pub fn crest_factor(frame: &[f64]) -> f64 {
    let r = rms(frame);
    if r == 0.0 {
        return 0.0;
    }
    frame.iter().fold(0.0f64, |m, &x| m.max(x.abs())) / r
}

/// Extracts the accelerometer feature matrix for one event.
pub fn extract_accel_features(event: &Event, cfg: &AccelFeatureConfig) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let samples = event.accel.samples();
    let starts = frame_positions(samples.len(), cfg.frame_len, cfg.segments)?;
    let cols = cfg.feature_cols();
    let mut data = Array2::zeros((cfg.segments, cols));
    for (row, &start) in starts.iter().enumerate() {
        let frame = &samples[start..start + cfg.frame_len];
        let spectrum = power_spectrum(frame)?;
        let mut out = data.row_mut(row);
        for (k, &p) in spectrum.iter().enumerate() {
            out[k] = p;
        }
        let base = spectrum.len();
        out[base] = rms(frame);
        out[base + 1] = kurtosis(frame);
        out[base + 2] = moving_average(frame);
        out[base + 3] = crest_factor(frame);
    }
    Ok(FeatureMatrix {
        modality: Modality::Accel,
        data,
    })
}
