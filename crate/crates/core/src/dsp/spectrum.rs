//! FFT power spectra, band power and peak picking.

use rustfft::{num_complex::Complex64, FftPlanner};
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::signal::Waveform;

/// Taper applied before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

/// One-sided spectrum: bins `k * fs / N` for `k = 0..=N/2`, power `|X(k)|^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSpectrum {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    /// Length of the transformed record.
    pub n_fft: usize,
    pub sample_rate: f64,
}

impl PowerSpectrum {
    pub fn resolution(&self) -> f64 {
        self.sample_rate / self.n_fft as f64
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// CSV with columns `frequency_hz,power`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("frequency_hz,power\n");
        for (f, p) in self.frequencies.iter().zip(&self.power) {
            s.push_str(&format!("{f},{p}\n"));
        }
        s
    }

    /// Index of the bin nearest `freq`.
    pub fn bin_of(&self, freq: f64) -> usize {
        ((freq / self.resolution()).round() as usize).min(self.len() - 1)
    }
}

pub(crate) fn fft(samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

pub(crate) fn ifft(mut buf: Vec<Complex64>) -> Vec<Complex64> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Rectangular-window power spectrum.
pub fn power_spectrum(x: &Waveform) -> Result<PowerSpectrum> {
    power_spectrum_with(x, Window::Rectangular)
}

pub fn power_spectrum_with(x: &Waveform, window: Window) -> Result<PowerSpectrum> {
    let n = x.len();
    if n < 2 {
        return Err(invalid(format!("power spectrum needs at least 2 samples, got {n}")));
    }
    let tapered: Vec<f64> = match window {
        Window::Rectangular => x.samples().to_vec(),
        Window::Hann => x
            .samples()
            .iter()
            .enumerate()
            .map(|(i, &v)| v * 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
            .collect(),
    };
    let spec = fft(&tapered);
    let fs = x.sample_rate();
    let bins = n / 2 + 1;
    Ok(PowerSpectrum {
        frequencies: (0..bins).map(|k| k as f64 * fs / n as f64).collect(),
        power: spec[..bins].iter().map(|c| c.norm_sqr()).collect(),
        n_fft: n,
        sample_rate: fs,
    })
}

/// Sum of power over bins with `f_low <= f <= f_high`.
pub fn band_power(spec: &PowerSpectrum, f_low: f64, f_high: f64) -> Result<f64> {
    if !(f_low >= 0.0 && f_low < f_high) {
        return Err(invalid(format!("band {f_low}..{f_high} Hz is not a valid range")));
    }
    Ok(sum_bins(spec, |f| f >= f_low && f <= f_high))
}

fn sum_bins(spec: &PowerSpectrum, keep: impl Fn(f64) -> bool) -> f64 {
    spec.frequencies
        .iter()
        .zip(&spec.power)
        .filter(|(f, _)| keep(**f))
        .map(|(_, p)| p)
        .sum()
}

/// Frequency of the strongest bin at or above `f_min`; ties go to the lower bin.
pub fn dominant_frequency(spec: &PowerSpectrum, f_min: f64) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for (&f, &p) in spec.frequencies.iter().zip(&spec.power) {
        if f < f_min {
            continue;
        }
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((f, p));
        }
    }
    best.map(|(f, _)| f)
        .ok_or_else(|| invalid(format!("no spectral bins at or above {f_min} Hz")))
}

/// Named EEG rhythm band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl Band {
    pub const ALL: [Band; 5] = [Band::Delta, Band::Theta, Band::Alpha, Band::Beta, Band::Gamma];

    /// `(low, high)` edges in Hz.
    pub fn edges(self) -> (f64, f64) {
        match self {
            Band::Delta => (0.5, 4.0),
            Band::Theta => (4.0, 8.0),
            Band::Alpha => (8.0, 13.0),
            Band::Beta => (13.0, 30.0),
            Band::Gamma => (30.0, 40.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::Delta => "delta",
            Band::Theta => "theta",
            Band::Alpha => "alpha",
            Band::Beta => "beta",
            Band::Gamma => "gamma",
        }
    }

    // Bands share edges, so each owns [low, high) except gamma, which also
    // owns 40 Hz. Together they cover [0.5, 40] with no bin counted twice.
    fn contains(self, f: f64) -> bool {
        let (lo, hi) = self.edges();
        f >= lo && (f < hi || (self == Band::Gamma && f <= hi))
    }
}

/// Lower edge of the analysed range.
pub const BAND_RANGE_LOW: f64 = 0.5;
/// Upper edge of the analysed range.
pub const BAND_RANGE_HIGH: f64 = 40.0;

/// Power per canonical band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandPowerReport {
    /// `(band, power)` in delta..gamma order.
    pub bands: Vec<(Band, f64)>,
    /// `(band, low_hz, high_hz)` edges used.
    pub edges: Vec<(Band, f64, f64)>,
}

impl BandPowerReport {
    pub fn from_spectrum(spec: &PowerSpectrum) -> Self {
        let bands = Band::ALL
            .iter()
            .map(|&b| (b, sum_bins(spec, |f| b.contains(f))))
            .collect();
        let edges = Band::ALL
            .iter()
            .map(|&b| {
                let (lo, hi) = b.edges();
                (b, lo, hi)
            })
            .collect();
        Self { bands, edges }
    }

    pub fn get(&self, band: Band) -> f64 {
        self.bands
            .iter()
            .find(|(b, _)| *b == band)
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    }

    /// Band name to power, for JSON output.
    pub fn to_map(&self) -> std::collections::BTreeMap<&'static str, f64> {
        self.bands.iter().map(|(b, p)| (b.name(), *p)).collect()
    }

    pub fn total(&self) -> f64 {
        self.bands.iter().map(|(_, p)| p).sum()
    }

    /// Fraction of the total carried by `bands`.
    pub fn share(&self, bands: &[Band]) -> f64 {
        let total = self.total();
        if total == 0.0 {
            return 0.0;
        }
        bands.iter().map(|&b| self.get(b)).sum::<f64>() / total
    }

    pub fn dominant_band(&self) -> Band {
        self.bands
            .iter()
            .fold((Band::Delta, f64::NEG_INFINITY), |best, &(b, p)| {
                if p > best.1 {
                    (b, p)
                } else {
                    best
                }
            })
            .0
    }
}

/// Band-passes `x` to 0.5–40 Hz (zero phase, default order) and reports band powers.
pub fn band_power_report(x: &Waveform) -> Result<BandPowerReport> {
    let spec = super::filter::BandpassSpec::new(
        BAND_RANGE_LOW,
        BAND_RANGE_HIGH,
        super::filter::DEFAULT_ORDER,
        x.sample_rate(),
    )?;
    let stages = super::filter::design_bandpass(&spec)?;
    let filtered = super::filter::filter_zero_phase(x, &stages)?;
    Ok(BandPowerReport::from_spectrum(&power_spectrum(&filtered)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: f64, secs: f64) -> Waveform {
        Waveform::from_fn((fs * secs) as usize, fs, |t| (2.0 * PI * freq * t).sin()).unwrap()
    }

    #[test]
    fn six_hz_tone_peaks_at_six() {
        let s = power_spectrum(&tone(6.0, 178.0, 4.0)).unwrap();
        assert_eq!(s.resolution(), 0.25);
        let f = dominant_frequency(&s, 0.5).unwrap();
        assert!((f - 6.0).abs() <= 0.125);
    }

    #[test]
    fn constant_has_only_dc() {
        let s = power_spectrum(&Waveform::new(vec![2.5; 64], 64.0).unwrap()).unwrap();
        assert!((s.power[0] - (2.5 * 64.0f64).powi(2)).abs() < 1e-6);
        assert!(s.power[1..].iter().all(|&p| p < 1e-18));
    }

    #[test]
    fn too_short_for_spectrum() {
        assert!(power_spectrum(&Waveform::new(vec![1.0], 10.0).unwrap()).is_err());
    }

    #[test]
    fn tie_goes_to_lower_frequency() {
        let s = PowerSpectrum {
            frequencies: (0..20).map(|k| k as f64).collect(),
            power: (0..20).map(|k| if k == 6 || k == 12 { 5.0 } else { 1.0 }).collect(),
            n_fft: 38,
            sample_rate: 38.0,
        };
        assert_eq!(dominant_frequency(&s, 0.5).unwrap(), 6.0);
        assert!(dominant_frequency(&s, 100.0).is_err());
    }

    #[test]
    fn band_power_edges_inclusive() {
        let s = PowerSpectrum {
            frequencies: vec![0.0, 1.0, 2.0, 3.0],
            power: vec![1.0, 2.0, 4.0, 8.0],
            n_fft: 6,
            sample_rate: 6.0,
        };
        assert_eq!(band_power(&s, 1.0, 2.0).unwrap(), 6.0);
        assert!(band_power(&s, 2.0, 1.0).is_err());
    }

    #[test]
    fn report_partition_matches_full_range() {
        // 178-sample records put bins on integer Hz, right on the band edges.
        let x = Waveform::from_fn(178, 178.0, |t| {
            (2.0 * PI * 4.0 * t).sin() + (2.0 * PI * 13.0 * t).cos() + 0.2 * (2.0 * PI * 40.0 * t).sin()
        })
        .unwrap();
        let s = power_spectrum(&x).unwrap();
        let r = BandPowerReport::from_spectrum(&s);
        let full = band_power(&s, 0.5, 40.0).unwrap();
        assert!((r.total() - full).abs() <= 1e-9 * full);
    }

    #[test]
    fn two_hz_tone_is_delta_dominated() {
        let r = band_power_report(&tone(2.0, 178.0, 4.0)).unwrap();
        assert_eq!(r.dominant_band(), Band::Delta);
    }

    #[test]
    fn ten_hz_tone_lands_in_alpha() {
        let r = band_power_report(&tone(10.0, 178.0, 4.0)).unwrap();
        assert!(r.share(&[Band::Alpha]) >= 0.99, "{:?}", r);
    }
}
