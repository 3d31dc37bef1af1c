//! Energy-based event segmentation.
//!
//! A recording is scanned with a sliding mean-square energy window on each
//! channel independently. Windows whose energy exceeds a multiple of that
//! channel's median energy are marked active, active stretches from the two
//! channels are unioned on the shared wall-clock timeline, nearby stretches
//! are merged, and anything too short is discarded. The result is a list of
//! candidate event intervals in seconds; no attempt is made to classify them
//! here.

use crate::error::{Error, Result};
use crate::signal::{AccelSignal, AudioSignal};

/// Tuning for [`detect_events`]. Defaults are deliberately permissive: the
/// detector's job is to find every burst of activity, the classifier decides
/// later what was a cough.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SegmenterConfig {
    /// Energy window length in seconds.
    pub window_s: f64,
    /// Hop between successive windows in seconds.
    pub hop_s: f64,
    /// A window is active when its energy exceeds this multiple of the
    /// channel's median window energy.
    pub threshold_factor: f64,
    /// Active stretches closer than this are merged into one event.
    pub merge_gap_s: f64,
    /// Events shorter than this are dropped.
    pub min_event_s: f64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            window_s: 0.1,
            hop_s: 0.05,
            threshold_factor: 4.0,
            merge_gap_s: 0.3,
            min_event_s: 0.3,
        }
    }
}

impl SegmenterConfig {
    fn validate(&self) -> Result<()> {
        if !(self.window_s > 0.0 && self.hop_s > 0.0) {
            return Err(Error::config("window_s and hop_s must be positive"));
        }
        if self.hop_s > self.window_s {
            return Err(Error::config(format!(
                "hop_s ({}) must not exceed window_s ({})",
                self.hop_s, self.window_s
            )));
        }
        if self.threshold_factor <= 0.0 {
            return Err(Error::config("threshold_factor must be positive"));
        }
        if self.merge_gap_s < 0.0 || self.min_event_s < 0.0 {
            return Err(Error::config("merge_gap_s and min_event_s must be non-negative"));
        }
        Ok(())
    }
}

/// Sliding mean-square energy. Returns `(window_center_s, energy)` for every
/// full window; the trailing partial window is not evaluated.
pub fn short_time_energy(
    samples: &[f64],
    sample_rate: u32,
    window_s: f64,
    hop_s: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(window_s > 0.0 && hop_s > 0.0) {
        return Err(Error::input("window_s and hop_s must be positive"));
    }
    let window = ((window_s * sample_rate as f64).round() as usize).max(1);
    let hop = ((hop_s * sample_rate as f64).round() as usize).max(1);
    if window > samples.len() {
        return Err(Error::input(format!(
            "window of {window} samples is longer than the signal ({} samples)",
            samples.len()
        )));
    }
    let mut out = Vec::with_capacity(samples.len() / hop + 1);
    let mut start = 0;
    while start + window <= samples.len() {
        let energy: f64 =
            samples[start..start + window].iter().map(|&v| v * v).sum::<f64>() / window as f64;
        let center = (start as f64 + window as f64 / 2.0) / sample_rate as f64;
        out.push((center, energy));
        start += hop;
    }
    Ok(out)
}

/// Detects activity intervals on the union of both channels.
///
/// Both channels must cover the same wall-clock span. Returned intervals are
/// sorted, pairwise disjoint, and each lasts at least `min_event_s`. The
/// whole decision is relative to per-channel median energy, so rescaling
/// either channel by a positive constant leaves the output unchanged.
pub fn detect_events(
    accel: &AccelSignal,
    audio: &AudioSignal,
    cfg: &SegmenterConfig,
) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    let skew = (accel.duration_s() - audio.duration_s()).abs();
    if skew > cfg.window_s {
        return Err(Error::input(format!(
            "channels cover different spans: accelerometer {:.3} s vs audio {:.3} s",
            accel.duration_s(),
            audio.duration_s()
        )));
    }

    let accel_runs = active_runs(
        &short_time_energy(accel.samples(), accel.sample_rate(), cfg.window_s, cfg.hop_s)?,
        cfg.threshold_factor,
    );
    let audio_runs = active_runs(
        &short_time_energy(audio.samples(), audio.sample_rate(), cfg.window_s, cfg.hop_s)?,
        cfg.threshold_factor,
    );

    let mut intervals: Vec<(f64, f64)> = accel_runs.into_iter().chain(audio_runs).collect();
    intervals.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (s, e) in intervals {
        match merged.last_mut() {
            Some((_, last_end)) if s - *last_end <= cfg.merge_gap_s => {
                *last_end = last_end.max(e);
            }
            _ => merged.push((s, e)),
        }
    }
    merged.retain(|(s, e)| e - s >= cfg.min_event_s);
    Ok(merged)
}

/// Stretches of consecutive windows whose energy exceeds
/// `threshold_factor * median`, as `(first_center, last_center)` intervals.
fn active_runs(energies: &[(f64, f64)], threshold_factor: f64) -> Vec<(f64, f64)> {
    let threshold = threshold_factor * median(energies.iter().map(|&(_, e)| e));
    let mut runs = Vec::new();
    let mut current: Option<(f64, f64)> = None;
    let mut prev_active_idx: Option<usize> = None;
    for (i, &(center, energy)) in energies.iter().enumerate() {
        if energy > threshold {
            match (current.as_mut(), prev_active_idx) {
                (Some((_, end)), Some(prev)) if i == prev + 1 => *end = center,
                _ => {
                    if let Some(run) = current.take() {
                        runs.push(run);
                    }
                    current = Some((center, center));
                }
            }
            prev_active_idx = Some(i);
        }
    }
    if let Some(run) = current {
        runs.push(run);
    }
    runs
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}
