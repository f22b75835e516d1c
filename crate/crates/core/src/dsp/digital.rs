//! Analogue ↔ binary conversions: mean-threshold digitizing and low-pass reconstruction.

use crate::error::{invalid, Result};
use crate::signal::{PulseTrain, Waveform};

use super::filter::{design_lowpass, filter_zero_phase};

/// Default reconstruction cutoff, between a 6 Hz fundamental and its third harmonic.
pub const DEFAULT_RECONSTRUCTION_CUTOFF_HZ: f64 = 10.0;

/// Order of the reconstruction low-pass (one second-order section).
pub const RECONSTRUCTION_ORDER: usize = 2;

/// `1` where a sample is strictly above the signal mean, else `0`.
pub fn digitize_mean_threshold(x: &Waveform) -> PulseTrain {
    let mu = x.mean();
    let bits = x.samples().iter().map(|&v| u8::from(v > mu)).collect();
    PulseTrain::new(bits, x.sample_rate()).expect("rate already validated")
}

/// Zero-order-hold resampling of a pulse train, levels mapped to ±1.
pub fn zero_order_hold(p: &PulseTrain, target_rate: f64) -> Result<Waveform> {
    if p.is_empty() {
        return Err(invalid("cannot resample an empty pulse train"));
    }
    if !(target_rate > 0.0) {
        return Err(invalid("target rate must be positive"));
    }
    let src_rate = p.sample_rate();
    let n_out = ((p.len() as f64 * target_rate / src_rate).round() as usize).max(1);
    let last = p.len() - 1;
    let samples = (0..n_out)
        .map(|i| {
            let idx = ((i as f64 / target_rate) * src_rate + 1e-9).floor() as usize;
            if p.bits()[idx.min(last)] == 1 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    Waveform::new(samples, target_rate)
}

/// Hold-resample then zero-phase low-pass, before mean removal.
pub fn reconstruct_analog_uncentered(p: &PulseTrain, target_rate: f64, cutoff: f64) -> Result<Waveform> {
    if !(cutoff > 0.0 && cutoff < target_rate / 2.0) {
        return Err(invalid(format!(
            "reconstruction cutoff {cutoff} Hz must lie below the {} Hz Nyquist limit",
            target_rate / 2.0
        )));
    }
    let held = zero_order_hold(p, target_rate)?;
    let lp = design_lowpass(cutoff, RECONSTRUCTION_ORDER, target_rate)?;
    filter_zero_phase(&held, &lp)
}

/// Smooth analogue rendering of a pulse train: ±1 levels, hold-resampled to
/// `target_rate`, zero-phase low-passed at `cutoff`, then mean-removed.
pub fn reconstruct_analog(p: &PulseTrain, target_rate: f64, cutoff: f64) -> Result<Waveform> {
    let y = reconstruct_analog_uncentered(p, target_rate, cutoff)?;
    let mu = y.mean();
    let centered = y.samples().iter().map(|v| v - mu).collect();
    Ok(y.with_samples(centered))
}
