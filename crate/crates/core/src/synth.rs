//! Synthetic bed-sensor data: labeled event corpora and continuous
//! recordings with known cough placements.
//!
//! The generator plants physically motivated structure rather than sampling
//! arbitrary noise. Each simulated patient gets persistent traits (overall
//! gain, a mattress resonance frequency, a body-movement rate, a voice
//! band). A cough event is one to three sharp bursts: band-limited noise
//! with a fast attack and slow decay on the microphone, and a damped
//! oscillation at the mattress resonance on the accelerometer, over a
//! breathy floor. A non-cough event is a slow movement artifact: a strong
//! low-frequency accelerometer swing with quiet low-band audio. The classes
//! therefore differ in spectral shape on both channels, the way the real
//! phenomena do, while patients differ enough that held-out-patient
//! evaluation is meaningful.
//!
//! Everything is drawn from seeded generators: the same configuration
//! produces byte-identical corpora.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::io::{save_event, write_manifest, DatasetManifest, ManifestRecord};
use crate::signal::{AccelSignal, AudioSignal, Event, Label, ACCEL_SAMPLE_RATE, AUDIO_SAMPLE_RATE};

/// Corpus shape and seeding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SynthConfig {
    pub patients: usize,
    pub coughs_per_patient: usize,
    pub non_coughs_per_patient: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            patients: 14,
            coughs_per_patient: 10,
            non_coughs_per_patient: 20,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.patients == 0 {
            return Err(Error::config("need at least one patient"));
        }
        if self.coughs_per_patient == 0 || self.non_coughs_per_patient == 0 {
            return Err(Error::config("each patient needs events of both classes"));
        }
        Ok(())
    }
}

/// Event durations in seconds: coughs are shorter and tighter than
/// non-cough movements. Both are truncated to a sensible span.
const COUGH_DURATION_MEAN: f64 = 1.90;
const COUGH_DURATION_STD: f64 = 0.26;
const NON_COUGH_DURATION_MEAN: f64 = 1.70;
const NON_COUGH_DURATION_STD: f64 = 0.24;
const MIN_DURATION_S: f64 = 0.5;
const MAX_DURATION_S: f64 = 4.0;

/// Persistent per-patient traits.
struct PatientTraits {
    gain: f64,
    /// Mattress/body resonance excited by coughs, Hz.
    resonance_hz: f64,
    /// Slow body-movement rate, Hz.
    movement_hz: f64,
    /// Cough audio band, Hz.
    band_lo_hz: f64,
    band_hi_hz: f64,
    /// Upper edge of non-cough audio rumble, Hz.
    rumble_hi_hz: f64,
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

fn patient_traits(seed: u64, patient: usize) -> PatientTraits {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, patient as u64, u64::MAX));
    PatientTraits {
        gain: rng.gen_range(-0.5..0.5f64).exp(),
        resonance_hz: rng.gen_range(8.0..20.0),
        movement_hz: rng.gen_range(0.3..1.5),
        band_lo_hz: rng.gen_range(250.0..400.0),
        band_hi_hz: rng.gen_range(2500.0..3500.0),
        rumble_hi_hz: rng.gen_range(500.0..1000.0),
    }
}

fn truncated_duration(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    let normal = Normal::new(mean, std).expect("fixed parameters");
    loop {
        let d = normal.sample(rng);
        if (MIN_DURATION_S..=MAX_DURATION_S).contains(&d) {
            return d;
        }
    }
}

/// Band-limited noise as a sum of `count` random-phase sinusoids spread
/// uniformly over `[lo_hz, hi_hz]` — spectrally contained by construction.
/// Each sinusoid is advanced by a rotating phasor, so the cost per sample
/// is a complex multiply rather than a `sin` call; the accumulated ulp
/// drift over a few-second event is far below the quantization floor.
fn band_noise(
    rng: &mut ChaCha8Rng,
    n: usize,
    sample_rate: f64,
    lo_hz: f64,
    hi_hz: f64,
    count: usize,
) -> Vec<f64> {
    use rustfft::num_complex::Complex64;
    let mut out = vec![0.0f64; n];
    for _ in 0..count {
        let f = rng.gen_range(lo_hz..hi_hz);
        let phase = rng.gen_range(0.0..2.0 * PI);
        let step = Complex64::from_polar(1.0, 2.0 * PI * f / sample_rate);
        let mut z = Complex64::from_polar(1.0, phase);
        for v in out.iter_mut() {
            *v += z.im;
            z *= step;
        }
    }
    let norm = 1.0 / (count as f64).sqrt();
    for v in out.iter_mut() {
        *v *= norm;
    }
    out
}

/// Rescales in place so the peak stays inside the writable range.
fn limit_peak(samples: &mut [f64], ceiling: f64) {
    let peak = samples.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if peak > ceiling {
        let s = ceiling / peak;
        for v in samples.iter_mut() {
            *v *= s;
        }
    }
}

/// Burst onset times within a cough event: one to three bursts starting
/// near the front, spaced out along the event.
fn burst_onsets(rng: &mut ChaCha8Rng, dur: f64) -> Vec<f64> {
    let n_bursts = rng.gen_range(1..=3usize);
    let mut onsets = Vec::with_capacity(n_bursts);
    let mut t = rng.gen_range(0.02..0.10) * dur;
    for _ in 0..n_bursts {
        if t > 0.8 * dur {
            break;
        }
        onsets.push(t);
        t += rng.gen_range(0.15..0.30) * dur.max(1.0);
    }
    onsets
}

/// Channel lengths for a nominal duration. The accelerometer length is
/// rounded first and the audio length follows from it, so both channels
/// describe the same span to within half an audio sample.
fn channel_lengths(dur: f64) -> (usize, usize) {
    let n_acc = (dur * ACCEL_SAMPLE_RATE as f64).round() as usize;
    let span = n_acc as f64 / ACCEL_SAMPLE_RATE as f64;
    let n_aud = (span * AUDIO_SAMPLE_RATE as f64).round() as usize;
    (n_acc, n_aud)
}

/// Synthesizes both channels of one cough event.
fn cough_channels(rng: &mut ChaCha8Rng, traits: &PatientTraits, dur: f64) -> (Vec<f64>, Vec<f64>) {
    let (n_acc, n_aud) = channel_lengths(dur);
    let onsets = burst_onsets(rng, dur);

    // Audio: per-burst band noise under a fast-attack, slow-decay envelope,
    // over a breathy floor that spans the whole event.
    let mut audio = band_noise(rng, n_aud, AUDIO_SAMPLE_RATE as f64, 150.0, 900.0, 24);
    let floor_amp = 0.06 * traits.gain;
    for v in audio.iter_mut() {
        *v *= floor_amp;
    }
    for &onset in &onsets {
        let amp = rng.gen_range(0.5..1.0) * traits.gain;
        let attack = 0.008;
        let decay = rng.gen_range(0.08..0.16);
        // The envelope is negligible past a few decay constants, so the
        // carrier only needs to cover that window.
        let first = ((onset * AUDIO_SAMPLE_RATE as f64).ceil() as usize).min(n_aud);
        let last = (((onset + attack + 8.0 * decay) * AUDIO_SAMPLE_RATE as f64).ceil() as usize)
            .min(n_aud);
        let carrier = band_noise(
            rng,
            last - first,
            AUDIO_SAMPLE_RATE as f64,
            traits.band_lo_hz,
            traits.band_hi_hz,
            60,
        );
        for (i, &c) in carrier.iter().enumerate() {
            let t = (first + i) as f64 / AUDIO_SAMPLE_RATE as f64 - onset;
            let env = (1.0 - (-t / attack).exp()) * (-t / decay).exp();
            audio[first + i] += amp * env * c;
        }
    }
    limit_peak(&mut audio, 0.95);

    // Accelerometer: damped resonance ring per burst, over a slight wobble
    // and sensor noise. Values are deviations around the gravity baseline.
    let wobble_phase = rng.gen_range(0.0..2.0 * PI);
    let mut accel: Vec<f64> = (0..n_acc)
        .map(|i| {
            let t = i as f64 / ACCEL_SAMPLE_RATE as f64;
            0.15 * traits.gain * (2.0 * PI * traits.movement_hz * t + wobble_phase).sin()
                + 0.01 * rng.gen_range(-1.0..1.0)
        })
        .collect();
    for &onset in &onsets {
        let amp = rng.gen_range(0.8..1.4) * traits.gain;
        let tau = rng.gen_range(0.05..0.12);
        let phase = rng.gen_range(0.0..2.0 * PI);
        for (i, v) in accel.iter_mut().enumerate() {
            let t = i as f64 / ACCEL_SAMPLE_RATE as f64 - onset;
            if t >= 0.0 {
                *v += amp * (-t / tau).exp() * (2.0 * PI * traits.resonance_hz * t + phase).sin();
            }
        }
    }

    (accel, audio)
}

/// Synthesizes both channels of one non-cough (movement) event.
fn non_cough_channels(
    rng: &mut ChaCha8Rng,
    traits: &PatientTraits,
    dur: f64,
) -> (Vec<f64>, Vec<f64>) {
    let (n_acc, n_aud) = channel_lengths(dur);

    let phase = rng.gen_range(0.0..2.0 * PI);
    let amp = rng.gen_range(0.6..1.1) * traits.gain;
    let accel: Vec<f64> = (0..n_acc)
        .map(|i| {
            let t = i as f64 / ACCEL_SAMPLE_RATE as f64;
            let swing = (2.0 * PI * traits.movement_hz * t + phase).sin()
                + 0.3 * (2.0 * PI * 2.0 * traits.movement_hz * t + 1.7 * phase).sin();
            amp * swing + 0.01 * rng.gen_range(-1.0..1.0)
        })
        .collect();

    let mut audio = band_noise(rng, n_aud, AUDIO_SAMPLE_RATE as f64, 60.0, traits.rumble_hi_hz, 40);
    let rumble_amp = 0.12 * traits.gain;
    for v in audio.iter_mut() {
        *v *= rumble_amp;
    }
    limit_peak(&mut audio, 0.95);

    (accel, audio)
}

/// Generates the full labeled corpus in memory. Event ids are
/// `patientNN/evNNN`; per-patient timelines advance with one-to-three
/// second gaps between events.
pub fn generate_events(cfg: &SynthConfig) -> Result<Vec<Event>> {
    cfg.validate()?;
    let mut events = Vec::with_capacity(cfg.patients * (cfg.coughs_per_patient + cfg.non_coughs_per_patient));
    for p in 0..cfg.patients {
        let patient = format!("patient{p:02}");
        let traits = patient_traits(cfg.seed, p);
        let per_patient = cfg.coughs_per_patient + cfg.non_coughs_per_patient;
        let mut clock = 0.0f64;
        for e in 0..per_patient {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, p as u64, e as u64));
            // Interleave so both classes appear throughout each timeline.
            let is_cough = e % per_patient < cfg.coughs_per_patient;
            let (label, dur) = if is_cough {
                (
                    Label::Cough,
                    truncated_duration(&mut rng, COUGH_DURATION_MEAN, COUGH_DURATION_STD),
                )
            } else {
                (
                    Label::NonCough,
                    truncated_duration(&mut rng, NON_COUGH_DURATION_MEAN, NON_COUGH_DURATION_STD),
                )
            };
            let (accel, audio) = if is_cough {
                cough_channels(&mut rng, &traits, dur)
            } else {
                non_cough_channels(&mut rng, &traits, dur)
            };
            clock += rng.gen_range(1.0..3.0);
            let start = clock;
            let end = start + accel.len() as f64 / ACCEL_SAMPLE_RATE as f64;
            clock = end;
            events.push(Event::new(
                format!("{patient}/ev{e:03}"),
                &patient,
                label,
                start,
                end,
                AccelSignal::new(accel)?,
                AudioSignal::new(audio)?,
            )?);
        }
    }
    Ok(events)
}

/// Generates the corpus and writes it to disk: one text trace and one WAV
/// per event under `dir/patientNN/`, a `manifest.jsonl`, and a
/// `synth_config.json` recording how the data was made. Returns the
/// manifest path.
pub fn generate_dataset(cfg: &SynthConfig, dir: &Path) -> Result<PathBuf> {
    let events = generate_events(cfg)?;
    let mut records = Vec::with_capacity(events.len());
    for event in &events {
        let rel = PathBuf::from(&event.id);
        let accel_rel = rel.with_extension("txt");
        let audio_rel = rel.with_extension("wav");
        let accel_abs = dir.join(&accel_rel);
        let audio_abs = dir.join(&audio_rel);
        if let Some(parent) = accel_abs.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        save_event(event, &accel_abs, &audio_abs)?;
        records.push(ManifestRecord {
            patient_id: event.patient_id.clone(),
            label: event.label,
            accel_path: accel_rel,
            audio_path: audio_rel,
            start_s: event.start_s,
            end_s: event.end_s,
        });
    }
    let manifest_path = dir.join("manifest.jsonl");
    write_manifest(&manifest_path, &DatasetManifest { records })?;
    let cfg_json = serde_json::to_string_pretty(cfg)?;
    crate::io::atomic_write(&dir.join("synth_config.json"), cfg_json.as_bytes())?;
    Ok(manifest_path)
}

/// A continuous two-channel recording with known cough placements, for
/// exercising the event detector.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub accel: AccelSignal,
    pub audio: AudioSignal,
    /// Ground-truth `(start_s, end_s)` per planted cough.
    pub coughs: Vec<(f64, f64)>,
}

/// Synthesizes a quiet recording with `n_events` coughs separated by at
/// least a second of near-silence.
pub fn generate_recording(n_events: usize, seed: u64) -> Recording {
    let traits = patient_traits(seed, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 1, 2));

    // Lay out the timeline first.
    let mut placements = Vec::with_capacity(n_events);
    let mut clock = 0.0f64;
    for _ in 0..n_events {
        clock += rng.gen_range(1.2..2.5);
        let dur = truncated_duration(&mut rng, COUGH_DURATION_MEAN, COUGH_DURATION_STD);
        placements.push((clock, clock + dur));
        clock += dur;
    }
    clock += rng.gen_range(1.2..2.5);

    let n_acc = (clock * ACCEL_SAMPLE_RATE as f64).ceil() as usize;
    let n_aud = (clock * AUDIO_SAMPLE_RATE as f64).ceil() as usize;
    let mut accel: Vec<f64> = (0..n_acc).map(|_| 0.002 * rng.gen_range(-1.0..1.0)).collect();
    let mut audio: Vec<f64> = (0..n_aud).map(|_| 0.001 * rng.gen_range(-1.0..1.0)).collect();

    for &(start, end) in &placements {
        let dur = end - start;
        let (ev_acc, ev_aud) = cough_channels(&mut rng, &traits, dur);
        let acc_off = (start * ACCEL_SAMPLE_RATE as f64).round() as usize;
        let aud_off = (start * AUDIO_SAMPLE_RATE as f64).round() as usize;
        for (i, v) in ev_acc.iter().enumerate() {
            if acc_off + i < accel.len() {
                accel[acc_off + i] += v;
            }
        }
        for (i, v) in ev_aud.iter().enumerate() {
            if aud_off + i < audio.len() {
                audio[aud_off + i] += v;
            }
        }
    }
    limit_peak(&mut audio, 0.95);

    Recording {
        accel: AccelSignal::new(accel).expect("generated samples are finite"),
        audio: AudioSignal::new(audio).expect("generated samples are bounded"),
        coughs: placements,
    }
}

/// Intersection-over-union of two intervals; 0 when they do not overlap.
pub fn interval_iou(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    let union = (a.1.max(b.1) - a.0.min(b.0)).max(f64::MIN_POSITIVE);
    inter / union
}
