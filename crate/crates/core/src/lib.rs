//! Detection of coughs from paired bed-mounted accelerometer and microphone
//! recordings.
//!
//! The pipeline stages map onto the modules below:
//!
//! - [`signal`]: channel types at their fixed sample rates, plus axis
//!   magnitude.
//! - [`io`]: WAV and text traces, the JSONL dataset manifest, atomic writes.
//! - [`segmentation`]: median-relative energy detector producing candidate
//!   event intervals from either channel.
//! - [`features`]: fixed-shape per-event feature matrices (spectral and
//!   statistical for the accelerometer, cepstral for audio).
//! - [`balance`]: minority oversampling for the heavily skewed class counts.
//! - [`classifiers`]: logistic regression, a kernel SVM, and a small neural
//!   network, all scoring events as cough probabilities.
//! - [`evaluation`]: leave-one-patient-out cross-validation with a nested
//!   development patient for hyperparameter selection, ROC analysis, and
//!   report aggregation.
//! - [`synth`]: a deterministic generator of labeled synthetic recordings
//!   for end-to-end testing and demos.

pub mod balance;
pub mod classifiers;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod io;
pub mod segmentation;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
