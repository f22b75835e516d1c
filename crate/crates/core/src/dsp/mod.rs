//! Signal mathematics: Butterworth filtering, spectra, band power,
//! digitizing and analogue reconstruction.

pub mod digital;
pub mod filter;
pub mod spectrum;

pub use digital::{
    digitize_mean_threshold, reconstruct_analog, reconstruct_analog_uncentered, zero_order_hold,
    DEFAULT_RECONSTRUCTION_CUTOFF_HZ,
};
pub use filter::{
    design_bandpass, design_lowpass, filter_zero_phase, BandpassSpec, Biquad, FilterStages,
    StreamingFilter, DEFAULT_ORDER,
};
pub use spectrum::{
    band_power, band_power_report, dominant_frequency, power_spectrum, power_spectrum_with, Band,
    BandPowerReport, PowerSpectrum, Window, BAND_RANGE_HIGH, BAND_RANGE_LOW,
};
