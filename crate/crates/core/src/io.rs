//! File formats: 16-bit PCM WAV for audio, plain-text decimal traces for
//! accelerometer magnitudes, and a JSONL manifest tying event files to
//! patients and labels.
//!
//! All writers go through [`atomic_write`] so a crashed run never leaves a
//! truncated artifact behind.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{AccelSignal, AudioSignal, Event, Label, AUDIO_SAMPLE_RATE};

/// Smallest analysis frame the feature extractors support, per channel.
/// Events shorter than this cannot produce a single frame and are rejected
/// when loaded.
pub const MIN_ACCEL_SAMPLES: usize = 16;
pub const MIN_AUDIO_SAMPLES: usize = 256;

/// One manifest line: where a labeled event's channel files live and where
/// the event sits on its patient's timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub patient_id: String,
    pub label: Label,
    pub accel_path: PathBuf,
    pub audio_path: PathBuf,
    pub start_s: f64,
    pub end_s: f64,
}

impl ManifestRecord {
    /// Event identifier derived from the record: patient id plus the accel
    /// file stem. Unique within any well-formed manifest.
    pub fn event_id(&self) -> String {
        let stem = self
            .accel_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.accel_path.to_string_lossy().into_owned());
        format!("{}/{}", self.patient_id, stem)
    }
}

/// A dataset manifest: an ordered list of event records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn patient_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .records
            .iter()
            .map(|r| r.patient_id.clone())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

/// Writes `bytes` to `path` via a temporary file in the same directory
/// followed by a rename, so readers never observe a partial file. The
/// temporary name embeds the process id so concurrent writers of the same
/// path cannot interleave into one temporary file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::load(path, "path has no file name"))?;
    let mut tmp = path.to_path_buf();
    tmp.set_file_name(format!(
        ".{}.{}.tmp",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Stable 64-bit FNV-1a hash, used for content-independent file naming.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Filesystem-safe file stem for an event id: path-hostile characters are
/// replaced and a short hash of the raw id is appended so distinct ids
/// never collide after sanitization.
pub fn safe_file_stem(id: &str) -> String {
    let safe: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{safe}-{:08x}", fnv1a64(id.as_bytes()) as u32)
}

// --- WAV -------------------------------------------------------------------

/// Reads a mono 16-bit PCM WAV file recorded at [`AUDIO_SAMPLE_RATE`].
/// Samples are normalized to [-1, 1] by dividing by 32768.
pub fn read_wav(path: &Path) -> Result<AudioSignal> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let err = |reason: &str| Error::load(path, reason);

    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(err("not a RIFF/WAVE file"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| err("chunk extends past end of file"))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(err("fmt chunk too short"));
                }
                let format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                fmt = Some((format, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are word-aligned; odd sizes carry a pad byte.
        pos = body_end + (size & 1);
    }

    let (format, channels, rate, bits) = fmt.ok_or_else(|| err("missing fmt chunk"))?;
    if format != 1 || bits != 16 {
        return Err(err(&format!(
            "unsupported encoding (format {format}, {bits}-bit); expected 16-bit PCM"
        )));
    }
    if channels != 1 {
        return Err(err(&format!("expected mono audio, found {channels} channels")));
    }
    if rate != AUDIO_SAMPLE_RATE {
        return Err(err(&format!(
            "sample rate {rate} Hz does not match the expected {AUDIO_SAMPLE_RATE} Hz"
        )));
    }
    let data = data.ok_or_else(|| err("missing data chunk"))?;
    if data.is_empty() {
        return Err(err("audio contains no samples"));
    }
    if data.len() % 2 != 0 {
        return Err(err("data chunk has an odd byte count"));
    }
    let samples = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
        .collect();
    AudioSignal::new(samples)
}

/// Writes a mono 16-bit PCM WAV file at [`AUDIO_SAMPLE_RATE`]. Samples are
/// quantized by `round(x * 32768)` clamped to the i16 range, so a signal that
/// was itself read from PCM16 round-trips bit-exactly.
pub fn write_wav(path: &Path, audio: &AudioSignal) -> Result<()> {
    let n = audio.len();
    let data_len = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&AUDIO_SAMPLE_RATE.to_le_bytes());
    out.extend_from_slice(&(AUDIO_SAMPLE_RATE * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in audio.samples() {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    atomic_write(path, &out)
}

// --- Accelerometer text ----------------------------------------------------

/// Reads an accelerometer magnitude trace: UTF-8 text, one decimal value per
/// line.
pub fn read_accel_text(path: &Path) -> Result<AccelSignal> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Error::load(path, format!("line {}: not a decimal value: {line:?}", i + 1))
        })?;
        if !v.is_finite() {
            return Err(Error::load(path, format!("line {}: non-finite value", i + 1)));
        }
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(Error::load(path, "trace contains no samples"));
    }
    AccelSignal::new(samples)
}

/// Writes an accelerometer trace as text. Values use the shortest decimal
/// form that parses back to the identical f64, so round trips are bit-exact.
pub fn write_accel_text(path: &Path, accel: &AccelSignal) -> Result<()> {
    let mut out = String::new();
    for &v in accel.samples() {
        out.push_str(&format!("{v}\n"));
    }
    atomic_write(path, out.as_bytes())
}

// --- Manifest --------------------------------------------------------------

/// Reads a JSONL manifest. Blank lines are ignored; any other malformed line
/// is an error naming its line number.
pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ManifestRecord = serde_json::from_str(line)
            .map_err(|e| Error::load(path, format!("line {}: {e}", i + 1)))?;
        validate_record(&rec).map_err(|e| Error::load(path, format!("line {}: {e}", i + 1)))?;
        records.push(rec);
    }
    Ok(DatasetManifest { records })
}

pub fn write_manifest(path: &Path, manifest: &DatasetManifest) -> Result<()> {
    let mut out = String::new();
    for rec in &manifest.records {
        out.push_str(&serde_json::to_string(rec)?);
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

fn validate_record(rec: &ManifestRecord) -> std::result::Result<(), String> {
    if rec.patient_id.is_empty() {
        return Err("empty patient_id".into());
    }
    if !(rec.start_s >= 0.0 && rec.end_s > rec.start_s) {
        return Err(format!(
            "bad interval: start_s={}, end_s={}",
            rec.start_s, rec.end_s
        ));
    }
    Ok(())
}

/// Loads one event's channel files. Relative paths in the record are resolved
/// against `base_dir` (normally the manifest's directory).
pub fn load_event(record: &ManifestRecord, base_dir: &Path) -> Result<Event> {
    let accel_path = resolve(base_dir, &record.accel_path);
    let audio_path = resolve(base_dir, &record.audio_path);
    let accel = read_accel_text(&accel_path)?;
    let audio = read_wav(&audio_path)?;
    if accel.len() < MIN_ACCEL_SAMPLES {
        return Err(Error::load(
            &accel_path,
            format!(
                "event too short for analysis: {} accelerometer samples, need at least {}",
                accel.len(),
                MIN_ACCEL_SAMPLES
            ),
        ));
    }
    if audio.len() < MIN_AUDIO_SAMPLES {
        return Err(Error::load(
            &audio_path,
            format!(
                "event too short for analysis: {} audio samples, need at least {}",
                audio.len(),
                MIN_AUDIO_SAMPLES
            ),
        ));
    }
    Event::new(
        record.event_id(),
        record.patient_id.clone(),
        record.label,
        record.start_s,
        record.end_s,
        accel,
        audio,
    )
}

/// Writes both channel files for an event.
pub fn save_event(event: &Event, accel_path: &Path, audio_path: &Path) -> Result<()> {
    write_accel_text(accel_path, &event.accel)?;
    write_wav(audio_path, &event.audio)
}

/// Loads every event in a manifest, checking that derived event ids are
/// unique.
pub fn load_events(manifest: &DatasetManifest, base_dir: &Path) -> Result<Vec<Event>> {
    let mut seen = std::collections::HashSet::new();
    let mut events = Vec::with_capacity(manifest.records.len());
    for rec in &manifest.records {
        let ev = load_event(rec, base_dir)?;
        if !seen.insert(ev.id.clone()) {
            return Err(Error::input(format!("duplicate event id {}", ev.id)));
        }
        events.push(ev);
    }
    Ok(events)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
