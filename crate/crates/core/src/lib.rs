//! Seizure-entrainment workbench core.
//!
//! * [`eeg_dataset`]: chunked EEG dataset loading, class averaging, entropy.
//! * [`dsp`]: Butterworth filtering, spectra, band power, digitizing, reconstruction.
//! * [`oscillator`]: forced damped oscillator model and phase-lock detection.
//! * [`chip`]: cycle-level emulation of the 6 Hz entrainment chip.
//! * [`capture`]: logic-analyzer CSV ingestion and pulse timing statistics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capture;
pub mod chip;
pub mod dsp;
pub mod eeg_dataset;
pub mod error;
pub mod numeric;
pub mod oscillator;
pub mod signal;

pub use error::{Error, Result};
pub use signal::{PulseTrain, Waveform};
