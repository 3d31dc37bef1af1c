//! Audio feature extraction: MFCCs with first and second deltas, plus
//! zero-crossing rate and kurtosis per frame.
//!
//! The cepstral pipeline per frame is conventional:
//!
//! 1. pre-emphasis `y[n] = x[n] - alpha * x[n-1]` (first sample kept as-is),
//! 2. Hamming window,
//! 3. one-sided power spectrum,
//! 4. triangular mel filterbank energies,
//! 5. natural log with a small floor to keep silence finite,
//! 6. orthonormal DCT-II, truncated to the first `mfcc_count` coefficients.
//!
//! Deltas are the usual regression slope over a two-frame half-window with
//! replicated edges. With `s` frames and `m` coefficients the event matrix is
//! `(s, 3m + 2)`: coefficients, deltas, delta-deltas, then zero-crossing rate
//! and kurtosis in the last two columns.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::signal::{Event, AUDIO_SAMPLE_RATE};

use super::{frame_positions, power_spectrum, FeatureMatrix, Modality};

/// Converts Hz to the mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

/// Converts mels back to Hz.
pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10.0f64.powf(mel / 2595.0) - 1.0)
}

/// MFCC layout for the audio channel.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AudioFeatureConfig {
    /// Cepstral coefficients kept per frame.
    pub mfcc_count: usize,
    /// Samples per frame; must be a power of two.
    pub frame_len: usize,
    /// Frames extracted per event.
    pub segments: usize,
    /// Triangular filters in the mel filterbank; must be at least
    /// `mfcc_count` so the DCT truncation discards rather than invents
    /// information.
    pub mel_filters: usize,
    /// Filterbank frequency range in Hz.
    pub fmin: f64,
    pub fmax: f64,
    /// Pre-emphasis coefficient.
    pub preemphasis: f64,
    /// Filter energies below this are clamped before the log.
    pub log_floor: f64,
}

impl AudioFeatureConfig {
    /// Config with the stated coefficient count, frame length, and segment
    /// count, and conventional values everywhere else (`mel_filters` is
    /// `max(mfcc_count, 40)`).
    pub fn new(mfcc_count: usize, frame_len: usize, segments: usize) -> Self {
        AudioFeatureConfig {
            mfcc_count,
            frame_len,
            segments,
            mel_filters: mfcc_count.max(40),
            fmin: 0.0,
            fmax: AUDIO_SAMPLE_RATE as f64 / 2.0,
            preemphasis: 0.97,
            log_floor: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mfcc_count == 0 {
            return Err(Error::config("mfcc_count must be positive"));
        }
        if self.frame_len < 2 || !self.frame_len.is_power_of_two() {
            return Err(Error::config(format!(
                "audio frame_len must be a power of two, got {}",
                self.frame_len
            )));
        }
        if self.segments < 2 {
            return Err(Error::config("audio segments must be at least 2"));
        }
        if self.mel_filters < self.mfcc_count {
            return Err(Error::config(format!(
                "mel_filters ({}) must be at least mfcc_count ({})",
                self.mel_filters, self.mfcc_count
            )));
        }
        let nyquist = AUDIO_SAMPLE_RATE as f64 / 2.0;
        if !(self.fmin >= 0.0 && self.fmin < self.fmax && self.fmax <= nyquist) {
            return Err(Error::config(format!(
                "filterbank range [{}, {}] must satisfy 0 <= fmin < fmax <= {nyquist}",
                self.fmin, self.fmax
            )));
        }
        if !(0.0..1.0).contains(&self.preemphasis) {
            return Err(Error::config("preemphasis must be in [0, 1)"));
        }
        if self.log_floor <= 0.0 {
            return Err(Error::config("log_floor must be positive"));
        }
        Ok(())
    }

    /// Number of feature columns: coefficients, deltas, delta-deltas, ZCR,
    /// kurtosis.
    pub fn feature_cols(&self) -> usize {
        3 * self.mfcc_count + 2
    }
}

impl Default for AudioFeatureConfig {
    fn default() -> Self {
        AudioFeatureConfig::new(13, 1024, 100)
    }
}

/// Triangular mel filterbank as an `(n_filters, fft_len/2 + 1)` matrix of
/// weights in [0, 1].
///
/// Filter centers are equally spaced on the mel scale between `fmin` and
/// `fmax`; each filter rises from the previous center to its own and falls to
/// the next, so adjacent filters overlap. Errors if any filter captures no
/// spectral bin at all, which happens when the filter spacing drops below the
/// FFT bin spacing.
pub fn mel_filterbank(
    n_filters: usize,
    fft_len: usize,
    sample_rate: f64,
    fmin: f64,
    fmax: f64,
) -> Result<Array2<f64>> {
    if n_filters == 0 {
        return Err(Error::config("filterbank needs at least one filter"));
    }
    if fft_len < 2 || !fft_len.is_power_of_two() {
        return Err(Error::config("fft_len must be a power of two"));
    }
    let n_bins = fft_len / 2 + 1;
    let mel_min = hz_to_mel(fmin);
    let mel_max = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(mel_min + (mel_max - mel_min) * i as f64 / (n_filters + 1) as f64))
        .collect();

    let mut bank = Array2::zeros((n_filters, n_bins));
    for j in 0..n_filters {
        let (left, center, right) = (edges[j], edges[j + 1], edges[j + 2]);
        let mut any = false;
        for k in 0..n_bins {
            let f = k as f64 * sample_rate / fft_len as f64;
            let w = if f > left && f <= center {
                (f - left) / (center - left)
            } else if f > center && f < right {
                (right - f) / (right - center)
            } else {
                0.0
            };
            if w > 0.0 {
                bank[(j, k)] = w;
                any = true;
            }
        }
        if !any {
            return Err(Error::config(format!(
                "mel filter {j} (centered at {center:.1} Hz) captures no FFT bin; \
                 use fewer filters or a longer frame"
            )));
        }
    }
    Ok(bank)
}

/// Regression deltas over a half-window of two frames with replicated edges:
/// `d[t] = sum_n n * (c[t+n] - c[t-n]) / (2 * sum_n n^2)` for `n` in 1..=2.
pub fn deltas(seq: &Array2<f64>) -> Array2<f64> {
    let (rows, cols) = seq.dim();
    let clamp = |t: isize| -> usize { t.clamp(0, rows as isize - 1) as usize };
    let mut out = Array2::zeros((rows, cols));
    for t in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for n in 1..=2isize {
                let ahead = seq[(clamp(t as isize + n), c)];
                let behind = seq[(clamp(t as isize - n), c)];
                acc += n as f64 * (ahead - behind);
            }
            out[(t, c)] = acc / 10.0; // 2 * (1^2 + 2^2)
        }
    }
    out
}

/// Zero-crossing rate: sign changes between consecutive samples divided by
/// `len - 1`. Zero samples count as positive.
pub fn zcr(frame: &[f64]) -> f64 {
    if frame.len() < 2 {
        return 0.0;
    }
    let positive = |x: f64| x >= 0.0;
    let changes = frame
        .windows(2)
        .filter(|w| positive(w[0]) != positive(w[1]))
        .count();
    changes as f64 / (frame.len() - 1) as f64
}

/// Extractor with the filterbank built once per config and shared across
/// frames and events.
#[derive(Debug, Clone)]
pub struct AudioFeatureExtractor {
    cfg: AudioFeatureConfig,
    filterbank: Array2<f64>,
    window: Vec<f64>,
}

impl AudioFeatureExtractor {
    pub fn new(cfg: AudioFeatureConfig) -> Result<Self> {
        cfg.validate()?;
        let filterbank = mel_filterbank(
            cfg.mel_filters,
            cfg.frame_len,
            AUDIO_SAMPLE_RATE as f64,
            cfg.fmin,
            cfg.fmax,
        )?;
        let n = cfg.frame_len;
        let window = (0..n)
            .map(|i| {
                0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()
            })
            .collect();
        Ok(AudioFeatureExtractor {
            cfg,
            filterbank,
            window,
        })
    }

    pub fn config(&self) -> &AudioFeatureConfig {
        &self.cfg
    }

    /// MFCCs for one frame of exactly `frame_len` samples.
    pub fn mfcc_frame(&self, frame: &[f64]) -> Result<Vec<f64>> {
        let n = self.cfg.frame_len;
        if frame.len() != n {
            return Err(Error::input(format!(
                "expected a frame of {n} samples, got {}",
                frame.len()
            )));
        }

        let mut emphasized = Vec::with_capacity(n);
        emphasized.push(frame[0]);
        for i in 1..n {
            emphasized.push(frame[i] - self.cfg.preemphasis * frame[i - 1]);
        }
        for (v, w) in emphasized.iter_mut().zip(&self.window) {
            *v *= w;
        }

        let spectrum = power_spectrum(&emphasized)?;
        let n_filters = self.cfg.mel_filters;
        let mut log_energies = Vec::with_capacity(n_filters);
        for j in 0..n_filters {
            let row = self.filterbank.row(j);
            let energy: f64 = row
                .iter()
                .zip(&spectrum)
                .map(|(&w, &p)| w * p)
                .sum();
            log_energies.push(energy.max(self.cfg.log_floor).ln());
        }

        Ok(dct_ii_orthonormal(&log_energies, self.cfg.mfcc_count))
    }

    /// Extracts the full audio feature matrix for one event.
    pub fn extract(&self, event: &Event) -> Result<FeatureMatrix> {
        let samples = event.audio.samples();
        let s = self.cfg.segments;
        let m = self.cfg.mfcc_count;
        let starts = frame_positions(samples.len(), self.cfg.frame_len, s)?;

        let mut coeffs = Array2::zeros((s, m));
        let mut rates = Vec::with_capacity(s);
        let mut kurts = Vec::with_capacity(s);
        for (row, &start) in starts.iter().enumerate() {
            let frame = &samples[start..start + self.cfg.frame_len];
            let c = self.mfcc_frame(frame)?;
            for (k, &v) in c.iter().enumerate() {
                coeffs[(row, k)] = v;
            }
            rates.push(zcr(frame));
            kurts.push(super::accel::kurtosis(frame));
        }

        let d1 = deltas(&coeffs);
        let d2 = deltas(&d1);

        let mut data = Array2::zeros((s, self.cfg.feature_cols()));
        for t in 0..s {
            for k in 0..m {
                data[(t, k)] = coeffs[(t, k)];
                data[(t, m + k)] = d1[(t, k)];
                data[(t, 2 * m + k)] = d2[(t, k)];
            }
            data[(t, 3 * m)] = rates[t];
            data[(t, 3 * m + 1)] = kurts[t];
        }
        Ok(FeatureMatrix {
            modality: Modality::Audio,
            data,
        })
    }
}

/// Convenience wrapper building a fresh extractor for a single event.
pub fn extract_audio_features(event: &Event, cfg: &AudioFeatureConfig) -> Result<FeatureMatrix> {
    AudioFeatureExtractor::new(*cfg)?.extract(event)
}

/// Orthonormal DCT-II truncated to `keep` coefficients.
fn dct_ii_orthonormal(values: &[f64], keep: usize) -> Vec<f64> {
    let n = values.len();
    let norm0 = (1.0 / n as f64).sqrt();
    let norm = (2.0 / n as f64).sqrt();
    (0..keep.min(n))
        .map(|k| {
            let sum: f64 = values
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    v * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64)
                        .cos()
                })
                .sum();
            if k == 0 {
                norm0 * sum
            } else {
                norm * sum
            }
        })
        .collect()
}
