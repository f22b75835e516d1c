//! Forced damped oscillator entrainment model and phase-lock detection.
//!
//! The oscillator coordinate obeys
//!
//! ```text
//! θ'' + 2ζω₀ θ' + ω₀² θ = F(t),   F(t) = A · pulse(t, f_chip)
//! ```
//!
//! where `pulse` is a 50 % duty square wave taking values `{0, 1}`.
//! Before the trigger the signal is an irregular noise process; after it
//! the oscillator is driven by the chip pulse and its phase is compared
//! against the forcing phase.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::dsp::spectrum::{fft, ifft};
use crate::dsp::{dominant_frequency, power_spectrum, PowerSpectrum};
use crate::error::{invalid, Result};
use crate::signal::Waveform;

/// High fraction of each forcing period.
pub const PULSE_DUTY: f64 = 0.5;

/// Default lock tolerance on the phase-difference drift, rad/s.
pub const DEFAULT_LOCK_TOL: f64 = 0.1;
/// Default trailing window for the drift fit, seconds.
pub const DEFAULT_LOCK_WINDOW: f64 = 1.0;

/// Integration step must not exceed one fiftieth of the fastest period.
const STEPS_PER_PERIOD: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillatorParams {
    /// Natural frequency ω₀, rad/s.
    pub omega0: f64,
    /// Damping ratio ζ.
    pub zeta: f64,
    /// Forcing amplitude A in `[0, 1]`.
    pub amplitude: f64,
    /// Forcing pulse frequency, Hz.
    pub f_chip: f64,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        Self {
            omega0: 2.0 * PI * 4.5,
            zeta: 0.3,
            amplitude: 1.0,
            f_chip: 6.0,
        }
    }
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(invalid(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(invalid(format!("zeta must be non-negative, got {}", self.zeta)));
        }
        if !(0.0..=1.0).contains(&self.amplitude) {
            return Err(invalid(format!("amplitude must lie in [0, 1], got {}", self.amplitude)));
        }
        if !(self.f_chip > 0.0 && self.f_chip.is_finite()) {
            return Err(invalid(format!("f_chip must be positive, got {}", self.f_chip)));
        }
        Ok(())
    }

    /// Largest step accepted by [`integrate`].
    pub fn max_dt(&self) -> f64 {
        1.0 / (STEPS_PER_PERIOD * self.f_chip.max(self.omega0 / (2.0 * PI)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct OscillatorState {
    pub theta: f64,
    pub theta_dot: f64,
    pub t: f64,
}

impl OscillatorState {
    pub fn at_rest() -> Self {
        Self::default()
    }

    /// `½θ'² + ½ω₀²θ²`.
    pub fn energy(&self, omega0: f64) -> f64 {
        0.5 * self.theta_dot * self.theta_dot + 0.5 * omega0 * omega0 * self.theta * self.theta
    }
}

/// Seeded pseudo-random signal in `[-1, 1]` with exactly zero sample mean.
pub fn noise_signal(n: usize, rate: f64, seed: u64) -> Result<Waveform> {
    if n == 0 {
        return Err(invalid("noise signal needs at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    samples.iter_mut().for_each(|v| *v -= mean);
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 1.0 {
        samples.iter_mut().for_each(|v| *v /= peak);
    }
    Waveform::new(samples, rate)
}

/// `A` during the first half of each chip period, `0` otherwise.
pub fn pulse_forcing(t: f64, params: &OscillatorParams) -> f64 {
    let phase = (t * params.f_chip).rem_euclid(1.0);
    if phase < PULSE_DUTY {
        params.amplitude
    } else {
        0.0
    }
}

/// Fixed-step classical RK4 of the forced damped oscillator.
///
/// Returns `round(duration / dt) + 1` states starting with `state0`.
pub fn integrate(
    params: &OscillatorParams,
    state0: OscillatorState,
    duration: f64,
    dt: f64,
    forcing: impl Fn(f64) -> f64,
) -> Result<Vec<OscillatorState>> {
    params.validate()?;
    if !(duration > 0.0) {
        return Err(invalid("duration must be positive"));
    }
    let max_dt = params.max_dt();
    if !(dt > 0.0 && dt <= max_dt * (1.0 + 1e-12)) {
        return Err(invalid(format!("step {dt} s exceeds stability limit {max_dt} s")));
    }

    let w0 = params.omega0;
    let c = 2.0 * params.zeta * w0;
    let k = w0 * w0;
    let accel = |t: f64, x: f64, v: f64| forcing(t) - c * v - k * x;

    let steps = (duration / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = state0;
    out.push(s);
    for i in 0..steps {
        let t = state0.t + i as f64 * dt;
        let (x, v) = (s.theta, s.theta_dot);
        let k1x = v;
        let k1v = accel(t, x, v);
        let k2x = v + 0.5 * dt * k1v;
        let k2v = accel(t + 0.5 * dt, x + 0.5 * dt * k1x, k2x);
        let k3x = v + 0.5 * dt * k2v;
        let k3v = accel(t + 0.5 * dt, x + 0.5 * dt * k2x, k3x);
        let k4x = v + dt * k3v;
        let k4v = accel(t + dt, x + dt * k3x, k4x);
        s = OscillatorState {
            theta: x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
            theta_dot: v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
            t: state0.t + (i + 1) as f64 * dt,
        };
        out.push(s);
    }
    Ok(out)
}

/// Unwrapped phase of the analytic signal of `x` (mean removed first).
pub fn instantaneous_phase(x: &Waveform) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 8 {
        return Err(invalid(format!("phase extraction needs at least 8 samples, got {n}")));
    }
    let mu = x.mean();
    let centered: Vec<f64> = x.samples().iter().map(|v| v - mu).collect();
    if centered.iter().all(|&v| v == 0.0) {
        return Err(invalid("phase is undefined for a zero signal"));
    }

    let mut spec = fft(&centered);
    let half = n / 2;
    for (k, c) in spec.iter_mut().enumerate() {
        let h = if k == 0 || (n.is_multiple_of(2) && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *c *= h;
    }
    let analytic: Vec<Complex64> = ifft(spec);
    Ok(unwrap(analytic.iter().map(|c| c.arg())))
}

fn unwrap(phases: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for p in phases {
        if let Some(q) = prev {
            let d = p - q;
            if d > PI {
                offset -= 2.0 * PI * ((d + PI) / (2.0 * PI)).floor();
            } else if d < -PI {
                offset += 2.0 * PI * ((-d + PI) / (2.0 * PI)).floor();
            }
        }
        prev = Some(p);
        out.push(p + offset);
    }
    out
}

/// Thresholds for [`detect_phase_lock`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LockCriteria {
    /// Maximum |drift| of the phase difference, rad/s.
    pub tol: f64,
    /// Length of the fitted window, seconds.
    pub window: f64,
    /// Seconds dropped from both record ends before fitting, to keep
    /// analytic-signal edge artefacts out of the drift estimate.
    pub edge_guard: f64,
}

impl Default for LockCriteria {
    fn default() -> Self {
        Self::new(DEFAULT_LOCK_TOL, DEFAULT_LOCK_WINDOW)
    }
}

impl LockCriteria {
    pub fn new(tol: f64, window: f64) -> Self {
        Self {
            tol,
            window,
            edge_guard: 0.0,
        }
    }

    pub fn with_edge_guard(mut self, seconds: f64) -> Self {
        self.edge_guard = seconds;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseLockReport {
    pub locked: bool,
    /// Start of the earliest window from which every later window stays
    /// within tolerance, seconds from the record start.
    pub lock_time: Option<f64>,
    /// `φ_a − φ_b` for every sample, radians.
    pub phase_diff_series: Vec<f64>,
    /// Drift of the phase difference over the trailing window, rad/s.
    pub residual_drift: f64,
}

/// Decides whether `a` and `b` are phase locked: the least-squares slope of
/// their phase difference over the trailing window must not exceed
/// `criteria.tol` in magnitude. A constant offset is allowed.
pub fn detect_phase_lock(a: &Waveform, b: &Waveform, criteria: &LockCriteria) -> Result<PhaseLockReport> {
    if a.len() != b.len() || a.sample_rate() != b.sample_rate() {
        return Err(invalid("phase-lock inputs must share length and sample rate"));
    }
    let fs = a.sample_rate();
    let win = (criteria.window * fs).round() as usize;
    let guard = (criteria.edge_guard * fs).round() as usize;
    if win < 2 || win + 2 * guard > a.len() {
        return Err(invalid(format!(
            "window of {} s (plus {} s guards) does not fit a {} s record",
            criteria.window,
            criteria.edge_guard,
            a.duration()
        )));
    }

    let pa = instantaneous_phase(a)?;
    let pb = instantaneous_phase(b)?;
    let diff: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();

    let usable = &diff[guard..diff.len() - guard];
    let slopes = sliding_slopes(usable, win, 1.0 / fs);
    let residual_drift = *slopes.last().expect("at least one window");
    let locked = residual_drift.abs() <= criteria.tol;

    let lock_time = if locked {
        let mut first = slopes.len() - 1;
        while first > 0 && slopes[first - 1].abs() <= criteria.tol {
            first -= 1;
        }
        Some((first + guard) as f64 / fs)
    } else {
        None
    };

    Ok(PhaseLockReport {
        locked,
        lock_time,
        phase_diff_series: diff,
        residual_drift,
    })
}

// Least-squares slope of every length-`win` window, O(n) via running sums.
fn sliding_slopes(y: &[f64], win: usize, dt: f64) -> Vec<f64> {
    let n = y.len();
    let w = win as f64;
    let x_mean = (w - 1.0) / 2.0;
    let sxx: f64 = (0..win).map(|k| (k as f64 - x_mean).powi(2)).sum();

    // Running sums are refreshed every 4096 windows to bound drift.
    let mut out = Vec::with_capacity(n + 1 - win);
    let mut sum_y = 0.0;
    let mut sum_ky = 0.0;
    for start in 0..=n - win {
        if start % 4096 == 0 {
            sum_y = y[start..start + win].iter().sum();
            sum_ky = y[start..start + win]
                .iter()
                .enumerate()
                .map(|(k, v)| k as f64 * v)
                .sum();
        } else {
            let dropped = y[start - 1];
            let added = y[start + win - 1];
            sum_ky = sum_ky - (sum_y - dropped) + (w - 1.0) * added;
            sum_y = sum_y - dropped + added;
        }
        let sxy = sum_ky - x_mean * sum_y;
        out.push(sxy / sxx / dt);
    }
    out
}

/// Outcome of one trigger-then-force run.
#[derive(Debug, Clone, Serialize)]
pub struct EntrainmentExperiment {
    pub params: OscillatorParams,
    pub seed: u64,
    pub sample_rate: f64,
    /// Pre-trigger irregular signal.
    pub pre_trigger: Waveform,
    /// Oscillator coordinate after the trigger.
    pub response: Waveform,
    /// Chip forcing `F(t)` on the same grid as `response`.
    pub forcing: Waveform,
    pub lock: PhaseLockReport,
    /// Spectrum of the final half of `response`.
    pub response_spectrum: PowerSpectrum,
    pub dominant_frequency: f64,
}

/// Knobs for [`run_entrainment_experiment`] beyond the model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentSettings {
    pub sample_rate: f64,
    pub criteria: LockCriteria,
    /// Response RMS below which the run is reported unlocked.
    pub amplitude_floor: f64,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            sample_rate: 1000.0,
            criteria: LockCriteria::default(),
            amplitude_floor: 1e-9,
        }
    }
}

/// Noise for `pre_s` seconds, then a trigger: the oscillator, driven by the
/// noise from rest until the trigger, is then driven by the chip pulse for
/// `post_s` seconds. The response phase is compared with the phase of the
/// forcing fundamental `sin(2π f_chip t)`.
pub fn run_entrainment_experiment(
    params: &OscillatorParams,
    pre_s: f64,
    post_s: f64,
    seed: u64,
    settings: &ExperimentSettings,
) -> Result<EntrainmentExperiment> {
    params.validate()?;
    if !(pre_s > 0.0 && post_s > 0.0) {
        return Err(invalid("pre- and post-trigger durations must be positive"));
    }
    let fs = settings.sample_rate;
    let dt = 1.0 / fs;
    let pre_n = ((pre_s * fs).round() as usize).max(1);
    let pre = noise_signal(pre_n, fs, seed)?;

    // The oscillator is driven by the noise (held per sample) until the
    // trigger, so the post-trigger transient starts on the forced scale.
    let noise = pre.samples();
    let pre_traj = integrate(params, OscillatorState::at_rest(), pre_n as f64 * dt, dt, |t| {
        noise[((t * fs + 1e-9).floor() as usize).min(pre_n - 1)]
    })?;
    let state0 = OscillatorState {
        t: 0.0,
        ..*pre_traj.last().expect("non-empty")
    };
    let traj = integrate(params, state0, post_s, dt, |t| pulse_forcing(t, params))?;
    let response = Waveform::new(traj.iter().map(|s| s.theta).collect(), fs)?;
    let forcing = Waveform::from_fn(response.len(), fs, |t| pulse_forcing(t, params))?;
    let reference = Waveform::from_fn(response.len(), fs, |t| (2.0 * PI * params.f_chip * t).sin())?;

    let half = response.len() / 2;
    let tail = response.slice(half, response.len());
    let response_spectrum = power_spectrum(&tail)?;
    let dominant = dominant_frequency(&response_spectrum, 0.5)?;

    let win = (settings.criteria.window * fs).round() as usize;
    let tail_rms = {
        let t = &response.samples()[response.len().saturating_sub(win)..];
        let m = t.iter().sum::<f64>() / t.len() as f64;
        (t.iter().map(|v| (v - m).powi(2)).sum::<f64>() / t.len() as f64).sqrt()
    };

    let lock = match detect_phase_lock(&response, &reference, &settings.criteria) {
        Ok(mut r) if tail_rms < settings.amplitude_floor => {
            r.locked = false;
            r.lock_time = None;
            r
        }
        Ok(r) => r,
        Err(crate::Error::Validation(msg)) if msg.contains("zero signal") => PhaseLockReport {
            locked: false,
            lock_time: None,
            phase_diff_series: Vec::new(),
            residual_drift: f64::INFINITY,
        },
        Err(e) => return Err(e),
    };

    Ok(EntrainmentExperiment {
        params: *params,
        seed,
        sample_rate: fs,
        pre_trigger: pre,
        response,
        forcing,
        lock,
        response_spectrum,
        dominant_frequency: dominant,
    })
}
