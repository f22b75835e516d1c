//! Butterworth IIR design (bilinear transform) and second-order-section filtering.

use rustfft::num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::signal::Waveform;

/// Default band-pass order.
pub const DEFAULT_ORDER: usize = 4;

/// Band-pass design request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandpassSpec {
    pub f_low: f64,
    pub f_high: f64,
    pub order: usize,
    pub sample_rate: f64,
}

impl BandpassSpec {
    pub fn new(f_low: f64, f_high: f64, order: usize, sample_rate: f64) -> Result<Self> {
        let spec = Self {
            f_low,
            f_high,
            order,
            sample_rate,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(invalid("filter order must be at least 1"));
        }
        if !(self.sample_rate > 0.0) {
            return Err(invalid("sample rate must be positive"));
        }
        let nyq = self.sample_rate / 2.0;
        if !(self.f_low > 0.0 && self.f_low < self.f_high && self.f_high < nyq) {
            return Err(invalid(format!(
                "band edges must satisfy 0 < f_low < f_high < {nyq} Hz, got {}..{}",
                self.f_low, self.f_high
            )));
        }
        Ok(())
    }
}

/// One biquad: `b0 + b1 z^-1 + b2 z^-2` over `1 + a1 z^-1 + a2 z^-2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z2 * self.b[2])
            / (self.a[0] + z_inv * self.a[1] + z2 * self.a[2])
    }

    fn dc_gain(&self) -> f64 {
        let den = self.a.iter().sum::<f64>();
        self.b.iter().sum::<f64>() / den
    }

    /// Roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let a1 = Complex64::new(self.a[1], 0.0);
        let a2 = Complex64::new(self.a[2], 0.0);
        let disc = (a1 * a1 - 4.0 * a2).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }
}

/// Cascade of biquads with an overall gain applied at the input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterStages {
    pub sections: Vec<Biquad>,
    pub gain: f64,
    pub sample_rate: f64,
}

impl FilterStages {
    /// Complex frequency response at `freq` Hz.
    pub fn response(&self, freq: f64) -> Complex64 {
        let w = 2.0 * PI * freq / self.sample_rate;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(self.gain, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude(&self, freq: f64) -> f64 {
        self.response(freq).norm()
    }

    pub fn is_stable(&self) -> bool {
        self.sections
            .iter()
            .all(|s| s.poles().iter().all(|p| p.norm() < 1.0))
    }

    /// Samples of odd-extension padding used by [`filter_zero_phase`].
    pub fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    /// Steady-state initial conditions of each section for a unit step input.
    fn step_initial_conditions(&self) -> Vec<[f64; 2]> {
        let mut scale = self.gain;
        self.sections
            .iter()
            .map(|s| {
                let g = s.dc_gain();
                let z2 = s.b[2] - s.a[2] * g;
                let z1 = s.b[1] - s.a[1] * g + z2;
                let zi = [z1 * scale, z2 * scale];
                scale *= g;
                zi
            })
            .collect()
    }

    fn run(&self, x: &[f64], mut state: Vec<[f64; 2]>) -> Vec<f64> {
        x.iter()
            .map(|&v| {
                let mut y = v * self.gain;
                for (s, z) in self.sections.iter().zip(state.iter_mut()) {
                    let out = s.b[0] * y + z[0];
                    z[0] = s.b[1] * y - s.a[1] * out + z[1];
                    z[1] = s.b[2] * y - s.a[2] * out;
                    y = out;
                }
                y
            })
            .collect()
    }

    /// Single forward (causal) pass from rest.
    pub fn filter_causal(&self, x: &Waveform) -> Waveform {
        let state = vec![[0.0; 2]; self.sections.len()];
        x.with_samples(self.run(x.samples(), state))
    }
}

/// Streaming causal filter, one sample at a time.
#[derive(Debug, Clone)]
pub struct StreamingFilter {
    stages: FilterStages,
    state: Vec<[f64; 2]>,
}

impl StreamingFilter {
    pub fn new(stages: FilterStages) -> Self {
        let state = vec![[0.0; 2]; stages.sections.len()];
        Self { stages, state }
    }

    pub fn process(&mut self, v: f64) -> f64 {
        let mut y = v * self.stages.gain;
        for (s, z) in self.stages.sections.iter().zip(self.state.iter_mut()) {
            let out = s.b[0] * y + z[0];
            z[0] = s.b[1] * y - s.a[1] * out + z[1];
            z[1] = s.b[2] * y - s.a[2] * out;
            y = out;
        }
        y
    }
}

// Prewarped analog frequency (rad/s) for the bilinear transform at `fs`.
fn prewarp(f: f64, fs: f64) -> f64 {
    2.0 * fs * (PI * f / fs).tan()
}

// Analog Butterworth low-pass prototype poles (unit cutoff).
fn prototype_poles(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|k| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

fn bilinear(s: Complex64, fs: f64) -> Complex64 {
    (2.0 * fs + s) / (2.0 * fs - s)
}

// Groups digital poles into conjugate pairs (or pairs of real poles) and
// emits `[1, a1, a2]` denominators.
fn pair_poles(poles: &[Complex64]) -> Vec<[f64; 3]> {
    let tol = 1e-10;
    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > tol).collect();
    let mut real: Vec<f64> = poles.iter().filter(|p| p.im.abs() <= tol).map(|p| p.re).collect();
    complex.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    real.sort_by(|a, b| a.total_cmp(b));

    let mut dens: Vec<[f64; 3]> = complex
        .iter()
        .map(|p| [1.0, -2.0 * p.re, p.norm_sqr()])
        .collect();
    for pair in real.chunks(2) {
        match pair {
            [p, q] => dens.push([1.0, -(p + q), p * q]),
            [p] => dens.push([1.0, -p, 0.0]),
            _ => unreachable!(),
        }
    }
    dens
}

/// Digital Butterworth band-pass. The magnitude at both band edges is
/// `1/sqrt(2)` of the unit passband peak.
pub fn design_bandpass(spec: &BandpassSpec) -> Result<FilterStages> {
    spec.validate()?;
    let fs = spec.sample_rate;
    let n = spec.order;
    let wl = prewarp(spec.f_low, fs);
    let wh = prewarp(spec.f_high, fs);
    let bw = wh - wl;
    let w0_sq = wl * wh;

    // Low-pass to band-pass: each prototype pole p maps to the two roots of
    // s^2 - p*bw*s + w0^2 = 0.
    let mut analog = Vec::with_capacity(2 * n);
    for p in prototype_poles(n) {
        let half = p * bw / 2.0;
        let disc = (half * half - w0_sq).sqrt();
        analog.push(half + disc);
        analog.push(half - disc);
    }

    let digital: Vec<Complex64> = analog.iter().map(|&s| bilinear(s, fs)).collect();

    // n analog zeros at s = 0 map to z = 1; the n zeros at infinity map to z = -1.
    let mut gain = Complex64::new(bw.powi(n as i32), 0.0);
    for _ in 0..n {
        gain *= 2.0 * fs;
    }
    for s in &analog {
        gain /= 2.0 * fs - s;
    }

    let sections = pair_poles(&digital)
        .into_iter()
        .map(|a| Biquad {
            b: [1.0, 0.0, -1.0],
            a,
        })
        .collect();

    Ok(FilterStages {
        sections,
        gain: gain.re,
        sample_rate: fs,
    })
}

/// Digital Butterworth low-pass of the given order.
pub fn design_lowpass(cutoff: f64, order: usize, sample_rate: f64) -> Result<FilterStages> {
    if order == 0 {
        return Err(invalid("filter order must be at least 1"));
    }
    let nyq = sample_rate / 2.0;
    if !(cutoff > 0.0 && cutoff < nyq) {
        return Err(invalid(format!(
            "low-pass cutoff must lie in (0, {nyq}) Hz, got {cutoff}"
        )));
    }
    let fs = sample_rate;
    let wc = prewarp(cutoff, fs);
    let analog: Vec<Complex64> = prototype_poles(order).into_iter().map(|p| p * wc).collect();
    let digital: Vec<Complex64> = analog.iter().map(|&s| bilinear(s, fs)).collect();

    // All analog zeros at infinity map to z = -1.
    let mut gain = Complex64::new(wc.powi(order as i32), 0.0);
    for s in &analog {
        gain /= 2.0 * fs - s;
    }

    let sections = pair_poles(&digital)
        .into_iter()
        .map(|a| {
            let b = if a[2] == 0.0 {
                [1.0, 1.0, 0.0]
            } else {
                [1.0, 2.0, 1.0]
            };
            Biquad { b, a }
        })
        .collect();

    Ok(FilterStages {
        sections,
        gain: gain.re,
        sample_rate: fs,
    })
}

/// Forward-backward filtering with odd-extension padding and steady-state
/// initial conditions. Output length equals input length; phase shift is zero.
pub fn filter_zero_phase(x: &Waveform, stages: &FilterStages) -> Result<Waveform> {
    let pad = stages.pad_len();
    let n = x.len();
    if n <= pad {
        return Err(invalid(format!(
            "zero-phase filtering needs more than {pad} samples, got {n}"
        )));
    }
    let s = x.samples();

    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * s[0] - s[i]));
    ext.extend_from_slice(s);
    ext.extend((1..=pad).map(|i| 2.0 * s[n - 1] - s[n - 1 - i]));

    let zi = stages.step_initial_conditions();
    let scaled = |z: &[[f64; 2]], x0: f64| z.iter().map(|v| [v[0] * x0, v[1] * x0]).collect();

    let mut fwd = stages.run(&ext, scaled(&zi, ext[0]));
    fwd.reverse();
    let mut back = stages.run(&fwd, scaled(&zi, fwd[0]));
    back.reverse();

    Ok(x.with_samples(back[pad..pad + n].to_vec()))
}
