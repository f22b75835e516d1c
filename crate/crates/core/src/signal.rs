//! Sampled-signal value types shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniformly sampled real-valued signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(invalid(format!("sample rate must be positive, got {sample_rate}")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Builds a waveform by evaluating `f` at `n` instants `k / sample_rate`.
    pub fn from_fn(n: usize, sample_rate: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..n).map(|k| f(k as f64 / sample_rate)).collect();
        Self::new(samples, sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Seconds covered by the samples.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn time_of(&self, index: usize) -> f64 {
        index as f64 / self.sample_rate
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        crate::numeric::compensated_sum(self.samples.iter().copied()) / self.samples.len() as f64
    }

    /// Copy of `self` with samples `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Waveform {
        Waveform {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }

    /// CSV with columns `time_s,<column>`.
    pub fn to_csv(&self, column: &str) -> String {
        let mut s = format!("time_s,{column}\n");
        for (k, v) in self.samples.iter().enumerate() {
            s.push_str(&format!("{},{}\n", self.time_of(k), v));
        }
        s
    }

    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Waveform {
        Waveform {
            samples,
            sample_rate: self.sample_rate,
        }
    }
}

/// Binary digital signal sampled at a uniform rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    bits: Vec<u8>,
    sample_rate: f64,
}

impl PulseTrain {
    pub fn new(bits: Vec<u8>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(invalid(format!("sample rate must be positive, got {sample_rate}")));
        }
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(invalid(format!("bit {i} is {}, expected 0 or 1", bits[i])));
        }
        Ok(Self { bits, sample_rate })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of 0→1 transitions between consecutive samples.
    pub fn rising_edges(&self) -> usize {
        self.bits.windows(2).filter(|w| w[0] == 0 && w[1] == 1).count()
    }

    /// Number of level changes between consecutive samples.
    pub fn transitions(&self) -> usize {
        self.bits.windows(2).filter(|w| w[0] != w[1]).count()
    }
}
