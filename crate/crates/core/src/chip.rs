//! Cycle-level behavioral model of the entrainment chip.
//!
//! The chip runs a 16-bit Fibonacci LFSR as its "chaotic" source, flags
//! bytes above an 8-bit threshold, and on a trigger clears the chaotic
//! register and emits a clock-divided square wave on `normal_signal`.
//! Once entrained it stays entrained until reset.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::signal::PulseTrain;

pub const DEFAULT_THRESHOLD: u8 = 0b0111_1111;
pub const DEFAULT_LFSR_SEED: u16 = 0xACE1;
pub const DEFAULT_TARGET_HZ: f64 = 6.0;
/// Virtual clock on which a 6 Hz divider is exact.
pub const VIRTUAL_CLOCK_HZ: u64 = 9_600;
/// Clock of the hardware simulation.
pub const HARDWARE_CLOCK_HZ: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChipConfig {
    pub clock_hz: u64,
    pub target_hz: f64,
    pub threshold: u8,
    pub lfsr_seed: u16,
    pub auto_trigger: bool,
}

impl Default for ChipConfig {
    fn default() -> Self {
        Self {
            clock_hz: VIRTUAL_CLOCK_HZ,
            target_hz: DEFAULT_TARGET_HZ,
            threshold: DEFAULT_THRESHOLD,
            lfsr_seed: DEFAULT_LFSR_SEED,
            auto_trigger: false,
        }
    }
}

impl ChipConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_hz > 0.0 && self.target_hz.is_finite()) {
            return Err(invalid(format!("target frequency must be positive, got {}", self.target_hz)));
        }
        if (self.clock_hz as f64) < 4.0 * self.target_hz {
            return Err(invalid(format!(
                "clock {} Hz is below four times the {} Hz target",
                self.clock_hz, self.target_hz
            )));
        }
        if self.threshold == 0 {
            return Err(invalid("threshold must be in 1..=255"));
        }
        if self.lfsr_seed == 0 {
            return Err(invalid("LFSR seed must be nonzero"));
        }
        Ok(())
    }

    pub fn half_period(&self) -> u64 {
        half_period(self)
    }
}

/// Clock cycles between output toggles: `round(clock / (2 · target))`, at least 1.
pub fn half_period(config: &ChipConfig) -> u64 {
    ((config.clock_hz as f64 / (2.0 * config.target_hz)).round() as u64).max(1)
}

/// Output frequency the divider actually produces.
pub fn realized_frequency(config: &ChipConfig) -> f64 {
    config.clock_hz as f64 / (2.0 * half_period(config) as f64)
}

/// One step of the 16-bit maximal-length Fibonacci LFSR, taps 16, 15, 13, 4.
pub fn lfsr_step(state: u16) -> u16 {
    let bit = (state ^ (state >> 2) ^ (state >> 3) ^ (state >> 5)) & 1;
    (state >> 1) | (bit << 15)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    Reset,
    Chaotic,
    Entrained,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Reset => "RESET",
            Mode::Chaotic => "CHAOTIC",
            Mode::Entrained => "ENTRAINED",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChipInputs {
    pub reset: bool,
    pub trigger_pulse: bool,
}

impl ChipInputs {
    pub const IDLE: ChipInputs = ChipInputs {
        reset: false,
        trigger_pulse: false,
    };
    pub const TRIGGER: ChipInputs = ChipInputs {
        reset: false,
        trigger_pulse: true,
    };
    pub const RESET: ChipInputs = ChipInputs {
        reset: true,
        trigger_pulse: false,
    };
}

/// Register state after a clock edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChipState {
    pub mode: Mode,
    pub lfsr: u16,
    pub chaotic_signal: u8,
    pub detect_pulse: bool,
    pub normal_signal: bool,
    pub divider_count: u64,
    /// Number of clock edges applied since power-on.
    pub cycle: u64,
}

impl ChipState {
    /// State right after power-on reset; the next tick enters CHAOTIC.
    pub fn power_on(config: &ChipConfig) -> Self {
        Self {
            mode: Mode::Reset,
            lfsr: config.lfsr_seed,
            chaotic_signal: 0,
            detect_pulse: false,
            normal_signal: false,
            divider_count: 0,
            cycle: 0,
        }
    }

    /// Applies `n` idle clock edges. Entrained runs are advanced
    /// arithmetically; chaotic runs step the LFSR each cycle (auto-trigger
    /// may fire part-way).
    pub fn advance_idle(&mut self, config: &ChipConfig, mut n: u64) {
        while n > 0 {
            if self.mode == Mode::Entrained {
                let half = half_period(config);
                let total = self.divider_count + n;
                let toggles = total / half;
                self.divider_count = total % half;
                if toggles % 2 == 1 {
                    self.normal_signal = !self.normal_signal;
                }
                self.cycle += n;
                return;
            }
            *self = tick(self, config, ChipInputs::IDLE);
            n -= 1;
        }
    }
}

/// One clock edge.
///
/// * `reset` forces RESET with the LFSR reloaded from the seed.
/// * From RESET or CHAOTIC, a trigger (or, with `auto_trigger`, the
///   registered detect pulse) enters ENTRAINED: the chaotic register is
///   cleared, the output is set high and the divider starts from zero.
///   Otherwise the LFSR advances, `chaotic_signal` takes its low byte and
///   `detect_pulse` is set when that byte exceeds the threshold.
/// * In ENTRAINED the divider counts up and the output toggles every
///   `half_period` cycles.
pub fn tick(state: &ChipState, config: &ChipConfig, inputs: ChipInputs) -> ChipState {
    let cycle = state.cycle + 1;
    if inputs.reset {
        return ChipState {
            cycle,
            ..ChipState::power_on(config)
        };
    }
    match state.mode {
        Mode::Reset | Mode::Chaotic => {
            let fire = inputs.trigger_pulse || (config.auto_trigger && state.detect_pulse);
            if fire {
                ChipState {
                    mode: Mode::Entrained,
                    lfsr: state.lfsr,
                    chaotic_signal: 0,
                    detect_pulse: false,
                    normal_signal: true,
                    divider_count: 0,
                    cycle,
                }
            } else {
                let lfsr = lfsr_step(state.lfsr);
                let chaotic_signal = (lfsr & 0xFF) as u8;
                ChipState {
                    mode: Mode::Chaotic,
                    lfsr,
                    chaotic_signal,
                    detect_pulse: chaotic_signal > config.threshold,
                    normal_signal: state.normal_signal,
                    divider_count: 0,
                    cycle,
                }
            }
        }
        Mode::Entrained => {
            let half = half_period(config);
            let mut divider_count = state.divider_count + 1;
            let mut normal_signal = state.normal_signal;
            if divider_count >= half {
                divider_count = 0;
                normal_signal = !normal_signal;
            }
            ChipState {
                mode: Mode::Entrained,
                lfsr: state.lfsr,
                chaotic_signal: 0,
                detect_pulse: false,
                normal_signal,
                divider_count,
                cycle,
            }
        }
    }
}

/// Signals recorded for one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleRecord {
    pub cycle: u64,
    pub mode: Mode,
    pub chaotic_signal: u8,
    pub detect_pulse: bool,
    pub normal_signal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChipTrace {
    pub config: ChipConfig,
    pub records: Vec<CycleRecord>,
}

/// Runs `n_cycles` clock edges from power-on. `trigger_at` asserts the
/// trigger for exactly that cycle; `reset_at` asserts reset for that cycle.
/// Record `k` holds the state after edge `k`.
pub fn run_trace(
    config: &ChipConfig,
    n_cycles: u64,
    trigger_at: Option<u64>,
    reset_at: Option<u64>,
) -> Result<ChipTrace> {
    config.validate()?;
    if n_cycles == 0 {
        return Err(invalid("trace needs at least one cycle"));
    }
    for (name, at) in [("trigger", trigger_at), ("reset", reset_at)] {
        if let Some(c) = at.filter(|&c| c >= n_cycles) {
            return Err(invalid(format!("{name} cycle {c} is beyond the {n_cycles}-cycle trace")));
        }
    }

    let mut state = ChipState::power_on(config);
    let mut records = Vec::with_capacity(n_cycles as usize);
    for k in 0..n_cycles {
        let inputs = ChipInputs {
            reset: reset_at == Some(k),
            trigger_pulse: trigger_at == Some(k),
        };
        state = tick(&state, config, inputs);
        records.push(CycleRecord {
            cycle: k,
            mode: state.mode,
            chaotic_signal: state.chaotic_signal,
            detect_pulse: state.detect_pulse,
            normal_signal: state.normal_signal,
        });
    }
    Ok(ChipTrace {
        config: *config,
        records,
    })
}

impl ChipTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn time_of(&self, cycle: u64) -> f64 {
        cycle as f64 / self.config.clock_hz as f64
    }

    /// Cycles at which `normal_signal` goes 0→1 (the power-on level is 0).
    pub fn rising_edges(&self) -> Vec<u64> {
        let mut prev = false;
        let mut out = Vec::new();
        for r in &self.records {
            if r.normal_signal && !prev {
                out.push(r.cycle);
            }
            prev = r.normal_signal;
        }
        out
    }

    /// Cycles at which `normal_signal` changes level.
    pub fn toggles(&self) -> Vec<u64> {
        let mut prev = false;
        let mut out = Vec::new();
        for r in &self.records {
            if r.normal_signal != prev {
                out.push(r.cycle);
            }
            prev = r.normal_signal;
        }
        out
    }

    /// Compact dump: every signal at the first record, then one entry per change.
    pub fn change_dump(&self) -> Vec<SignalChange> {
        let mut out = Vec::new();
        let mut prev: Option<&CycleRecord> = None;
        for r in &self.records {
            let changed = |f: fn(&CycleRecord) -> u64| prev.is_none_or(|p| f(p) != f(r));
            for sig in Signal::ALL {
                if changed(sig.getter()) {
                    out.push(SignalChange {
                        cycle: r.cycle,
                        signal: sig,
                        new_value: sig.getter()(r),
                    });
                }
            }
            prev = Some(r);
        }
        out
    }

    /// CSV with columns `cycle,time_s,mode,chaotic_signal,detect_pulse,normal_signal`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("cycle,time_s,mode,chaotic_signal,detect_pulse,normal_signal\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.cycle,
                self.time_of(r.cycle),
                r.mode,
                r.chaotic_signal,
                u8::from(r.detect_pulse),
                u8::from(r.normal_signal)
            ));
        }
        s
    }
}

/// Traced chip signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    Mode,
    ChaoticSignal,
    DetectPulse,
    NormalSignal,
}

impl Signal {
    pub const ALL: [Signal; 4] = [
        Signal::Mode,
        Signal::ChaoticSignal,
        Signal::DetectPulse,
        Signal::NormalSignal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Signal::Mode => "mode",
            Signal::ChaoticSignal => "chaotic_signal",
            Signal::DetectPulse => "detect_pulse",
            Signal::NormalSignal => "normal_signal",
        }
    }

    pub fn from_name(name: &str) -> Option<Signal> {
        Signal::ALL.into_iter().find(|s| s.name() == name)
    }

    // Mode values are encoded 0 = RESET, 1 = CHAOTIC, 2 = ENTRAINED.
    fn getter(self) -> fn(&CycleRecord) -> u64 {
        match self {
            Signal::Mode => |r| match r.mode {
                Mode::Reset => 0,
                Mode::Chaotic => 1,
                Mode::Entrained => 2,
            },
            Signal::ChaoticSignal => |r| r.chaotic_signal as u64,
            Signal::DetectPulse => |r| r.detect_pulse as u64,
            Signal::NormalSignal => |r| r.normal_signal as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SignalChange {
    pub cycle: u64,
    pub signal: Signal,
    pub new_value: u64,
}

/// Renders a change dump as CSV `cycle,signal,new_value`.
pub fn change_dump_csv(changes: &[SignalChange]) -> String {
    let mut s = String::from("cycle,signal,new_value\n");
    for c in changes {
        s.push_str(&format!("{},{},{}\n", c.cycle, c.signal.name(), c.new_value));
    }
    s
}

/// Parses CSV produced by [`change_dump_csv`].
pub fn parse_change_dump(text: &str) -> Result<Vec<SignalChange>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).ok_or_else(|| crate::error::parse_err(line, "missing field"));
        let cycle = field(0)?
            .parse()
            .map_err(|_| crate::error::parse_err(line, "cycle is not an integer"))?;
        let signal = Signal::from_name(field(1)?)
            .ok_or_else(|| crate::error::parse_err(line, format!("unknown signal {:?}", &rec[1])))?;
        let new_value = field(2)?
            .parse()
            .map_err(|_| crate::error::parse_err(line, "value is not an integer"))?;
        out.push(SignalChange {
            cycle,
            signal,
            new_value,
        });
    }
    Ok(out)
}

/// `(rising_edges − 1) / (t_last_rise − t_first_rise)`.
pub fn measure_output_frequency(trace: &ChipTrace) -> Result<f64> {
    let rises = trace.rising_edges();
    if rises.len() < 2 {
        return Err(Error::Measurement(format!(
            "need at least 2 rising edges of normal_signal, found {}",
            rises.len()
        )));
    }
    let span = (rises[rises.len() - 1] - rises[0]) as f64 / trace.config.clock_hz as f64;
    Ok((rises.len() - 1) as f64 / span)
}

/// Samples `normal_signal` at `sample_rate` using the nearest clock cycle.
pub fn chip_to_pulse_train(trace: &ChipTrace, sample_rate: f64) -> Result<PulseTrain> {
    let clock = trace.config.clock_hz as f64;
    if !(sample_rate > 0.0 && sample_rate <= clock) {
        return Err(invalid(format!(
            "sample rate {sample_rate} Hz must be positive and at most the {clock} Hz clock"
        )));
    }
    let n_cycles = trace.records.len();
    let n = ((n_cycles as f64 * sample_rate / clock) - 1e-9).ceil() as usize;
    let bits = (0..n)
        .map(|k| {
            let c = ((k as f64 / sample_rate) * clock).round() as usize;
            u8::from(trace.records[c.min(n_cycles - 1)].normal_signal)
        })
        .collect();
    PulseTrain::new(bits, sample_rate)
}
