//! Core signal types shared by the whole pipeline.
//!
//! Two synchronized channels exist per recording: the vector magnitude of a
//! bed-frame accelerometer sampled at 100 Hz, and a microphone channel at
//! 22.05 kHz. Sample rates are fixed properties of the capture hardware, so
//! they are compile-time constants rather than per-signal fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accelerometer sample rate in Hz.
pub const ACCEL_SAMPLE_RATE: u32 = 100;

/// Audio sample rate in Hz.
pub const AUDIO_SAMPLE_RATE: u32 = 22_050;

/// Unitless accelerometer magnitude trace at [`ACCEL_SAMPLE_RATE`].
///
/// Values are raw sensor magnitudes; no de-noising or calibration is applied
/// anywhere in the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelSignal {
    samples: Vec<f64>,
}

impl AccelSignal {
    /// Wraps a magnitude trace. All samples must be finite.
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("accelerometer samples must be finite"));
        }
        Ok(AccelSignal { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        ACCEL_SAMPLE_RATE
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / ACCEL_SAMPLE_RATE as f64
    }
}

/// Mono audio trace at [`AUDIO_SAMPLE_RATE`], normalized to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
}

impl AudioSignal {
    /// Wraps normalized audio. Samples must be finite and within [-1, 1].
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::input("audio samples must be finite and within [-1, 1]"));
        }
        Ok(AudioSignal { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        AUDIO_SAMPLE_RATE
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / AUDIO_SAMPLE_RATE as f64
    }
}

/// Ground-truth class of an annotated event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Cough,
    NonCough,
}

impl Label {
    pub fn is_cough(self) -> bool {
        matches!(self, Label::Cough)
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Cough => write!(f, "cough"),
            Label::NonCough => write!(f, "non_cough"),
        }
    }
}

/// One annotated interval of activity with both channels attached.
///
/// `start_s`/`end_s` locate the event on its patient's recording timeline;
/// the signal buffers hold only the event's own samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub id: String,
    pub patient_id: String,
    pub label: Label,
    pub start_s: f64,
    pub end_s: f64,
    pub accel: AccelSignal,
    pub audio: AudioSignal,
}

impl Event {
    /// Assembles an event, checking that both channels plausibly cover
    /// `[start_s, end_s]` (lengths within one sample of the nominal span).
    pub fn new(
        id: impl Into<String>,
        patient_id: impl Into<String>,
        label: Label,
        start_s: f64,
        end_s: f64,
        accel: AccelSignal,
        audio: AudioSignal,
    ) -> Result<Self> {
        let id = id.into();
        // Negated on purpose: a NaN endpoint fails `end_s > start_s` and
        // must land in the error branch, which `end_s <= start_s` would miss.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(end_s > start_s) {
            return Err(Error::input(format!(
                "event {id}: end_s ({end_s}) must be greater than start_s ({start_s})"
            )));
        }
        let dur = end_s - start_s;
        check_span(&id, "accelerometer", accel.len(), dur, ACCEL_SAMPLE_RATE)?;
        check_span(&id, "audio", audio.len(), dur, AUDIO_SAMPLE_RATE)?;
        Ok(Event {
            id,
            patient_id: patient_id.into(),
            label,
            start_s,
            end_s,
            accel,
            audio,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

fn check_span(id: &str, channel: &str, len: usize, dur: f64, rate: u32) -> Result<()> {
    let nominal = dur * rate as f64;
    if (len as f64 - nominal).abs() > 1.0 + 1e-6 {
        return Err(Error::input(format!(
            "event {id}: {channel} has {len} samples but the annotation spans {dur:.4} s \
             ({nominal:.1} samples at {rate} Hz)"
        )));
    }
    Ok(())
}

/// Combines per-axis accelerometer readings into the magnitude trace
/// `sqrt(x^2 + y^2 + z^2)` used everywhere downstream.
///
/// All three slices must have the same length.
pub fn magnitude(x: &[f64], y: &[f64], z: &[f64]) -> Result<AccelSignal> {
    if x.len() != y.len() || y.len() != z.len() {
        return Err(Error::input(format!(
            "axis lengths differ: x={}, y={}, z={}",
            x.len(),
            y.len(),
            z.len()
        )));
    }
    let samples = x
        .iter()
        .zip(y)
        .zip(z)
        .map(|((&a, &b), &c)| (a * a + b * b + c * c).sqrt())
        .collect();
    AccelSignal::new(samples)
}
