//! Frame-level feature extraction shared by both channels.
//!
//! An event is cut into a fixed number of possibly overlapping frames (see
//! [`frame_positions`]), each frame is summarized by a feature vector, and
//! the vectors are stacked into a [`FeatureMatrix`] whose shape depends only
//! on the extraction config, never on the event length. That fixed shape is
//! what lets events of different durations share one classifier.

pub mod accel;
pub mod audio;

use std::cell::RefCell;
use std::path::Path;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::io::atomic_write;

/// Which channel a feature matrix was extracted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Accel,
    Audio,
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Modality::Accel => write!(f, "accel"),
            Modality::Audio => write!(f, "audio"),
        }
    }
}

/// A (frames x features) matrix extracted from one event.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub modality: Modality,
    pub data: Array2<f64>,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    /// Row-major flattening, used to feed a whole event to a classifier as
    /// one fixed-length vector.
    pub fn flatten(&self) -> Vec<f64> {
        self.data.iter().copied().collect()
    }

    /// Binary layout: rows and cols as little-endian u32, then row-major
    /// values as little-endian f64.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let rows = u32::try_from(self.rows())
            .map_err(|_| Error::input("matrix has too many rows for the binary format"))?;
        let cols = u32::try_from(self.cols())
            .map_err(|_| Error::input("matrix has too many columns for the binary format"))?;
        let mut out = Vec::with_capacity(8 + self.data.len() * 8);
        out.extend_from_slice(&rows.to_le_bytes());
        out.extend_from_slice(&cols.to_le_bytes());
        for &v in self.data.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        atomic_write(path, &out)
    }

    pub fn read_binary(path: &Path, modality: Modality) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() < 8 {
            return Err(Error::load(path, "file too short for a matrix header"));
        }
        let rows = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let expected = 8 + rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::load(path, "matrix dimensions overflow"))?;
        if bytes.len() != expected {
            return Err(Error::load(
                path,
                format!("expected {expected} bytes for a {rows}x{cols} matrix, found {}", bytes.len()),
            ));
        }
        let values: Vec<f64> = bytes[8..]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let data = Array2::from_shape_vec((rows, cols), values)
            .map_err(|e| Error::load(path, e.to_string()))?;
        Ok(FeatureMatrix { modality, data })
    }
}

/// Start offsets for cutting `count` frames of `frame_len` samples out of an
/// event of `event_len` samples.
///
/// The frame skip is `ceil(event_len / count)`, so short events overlap
/// heavily and long events may leave gaps; every start is clamped so the
/// frame stays inside the event. Always returns exactly `count` positions.
pub fn frame_positions(event_len: usize, frame_len: usize, count: usize) -> Result<Vec<usize>> {
    if frame_len == 0 {
        return Err(Error::input("frame_len must be positive"));
    }
    if count < 2 {
        return Err(Error::input("frame count must be at least 2"));
    }
    if event_len < frame_len {
        return Err(Error::input(format!(
            "event of {event_len} samples is shorter than one {frame_len}-sample frame"
        )));
    }
    let skip = event_len.div_ceil(count);
    let last = event_len - frame_len;
    Ok((0..count).map(|i| (i * skip).min(last)).collect())
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Power spectrum of one frame: `|DFT(frame)[k]|^2` for `k = 0 ..= len/2`,
/// computed with an unnormalized forward transform and no window beyond the
/// frame cut itself. The frame length must be a power of two.
pub fn power_spectrum(frame: &[f64]) -> Result<Vec<f64>> {
    let n = frame.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::input(format!(
            "frame length must be a power of two (at least 2), got {n}"
        )));
    }
    let mut buf: Vec<Complex<f64>> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_forward(n);
        fft.process(&mut buf);
    });
    Ok(buf[..=n / 2].iter().map(|c| c.norm_sqr()).collect())
}
