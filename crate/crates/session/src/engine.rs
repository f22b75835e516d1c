//! Deterministic simulation core of a live session.
//!
//! The engine knows nothing about wall-clock time or clients: commands go
//! in through [`SessionEngine::apply`], frames come out of
//! [`SessionEngine::step`]. Identical configs and command schedules (by
//! frame) give identical frames.

use std::collections::VecDeque;

use hilts_core::chip::{tick, ChipConfig, ChipInputs, ChipState, Mode};
use hilts_core::dsp::{design_lowpass, StreamingFilter, DEFAULT_RECONSTRUCTION_CUTOFF_HZ};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{SessionConfig, SourceConfig};
use crate::error::SessionError;
use crate::protocol::{
    Ack, CommandKind, Event, EventKind, SessionCommand, TelemetryFrame, MAX_FREQUENCY_HZ, MIN_FREQUENCY_HZ,
};

enum Source {
    Chaotic,
    Replay(Vec<f64>),
    Noise(Box<ChaCha8Rng>),
}

pub struct SessionEngine {
    config: SessionConfig,
    chip_config: ChipConfig,
    chip: ChipState,
    source: Source,
    recon_filter: StreamingFilter,
    next_seq: u64,
    sim_ticks: u64,
    cycles: u64,
    paused: bool,
    // Pause state once every queued command has been applied.
    paused_after_queue: bool,
    queue: VecDeque<CommandKind>,
    detected: bool,
    raw: f64,
    recon: f64,
}

impl SessionEngine {
    pub fn new(config: &SessionConfig) -> Result<Self, SessionError> {
        config.validate()?;
        let chip_config = config.chip;
        // Release from power-on reset: the first frame already shows CHAOTIC.
        let chip = tick(&ChipState::power_on(&chip_config), &chip_config, ChipInputs::IDLE);
        let fs = 1.0 / config.sim_dt();
        let cutoff = DEFAULT_RECONSTRUCTION_CUTOFF_HZ.min(0.4 * fs);
        let recon_filter = StreamingFilter::new(design_lowpass(cutoff, 2, fs)?);
        let source = match &config.source {
            SourceConfig::ChaoticEmulator => Source::Chaotic,
            SourceConfig::DatasetReplay { samples, .. } => Source::Replay(samples.clone()),
            SourceConfig::Noise { seed } => Source::Noise(Box::new(ChaCha8Rng::seed_from_u64(*seed))),
        };
        Ok(Self {
            config: config.clone(),
            chip_config,
            detected: chip.detect_pulse,
            chip,
            source,
            recon_filter,
            next_seq: 0,
            sim_ticks: 0,
            cycles: 1,
            paused: false,
            paused_after_queue: false,
            queue: VecDeque::new(),
            raw: 0.0,
            recon: 0.0,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// Sequence number the next frame will carry.
    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn mode(&self) -> Mode {
        self.chip.mode
    }

    pub fn target_hz(&self) -> f64 {
        self.chip_config.target_hz
    }

    /// Validates and queues a command; accepted commands take effect in the
    /// next frame, whose seq the ack reports.
    pub fn apply(&mut self, cmd: &SessionCommand) -> Ack {
        match cmd.kind {
            CommandKind::SetFrequency(f) => {
                if !(MIN_FREQUENCY_HZ..=MAX_FREQUENCY_HZ).contains(&f) {
                    return Ack::rejected(
                        &cmd.id,
                        format!("frequency {f} Hz is outside {MIN_FREQUENCY_HZ}..={MAX_FREQUENCY_HZ} Hz"),
                    );
                }
                let trial = ChipConfig {
                    target_hz: f,
                    ..self.chip_config
                };
                if let Err(e) = trial.validate() {
                    return Ack::rejected(&cmd.id, e.to_string());
                }
            }
            CommandKind::Trigger | CommandKind::Reset if self.paused_after_queue => {
                return Ack::rejected(&cmd.id, "session is paused; resume first");
            }
            CommandKind::Pause => self.paused_after_queue = true,
            CommandKind::Resume => self.paused_after_queue = false,
            CommandKind::Trigger | CommandKind::Reset => {}
        }
        self.queue.push_back(cmd.kind);
        Ack::applied(&cmd.id, self.next_seq)
    }

    /// Applies queued commands, advances one telemetry interval (unless
    /// paused) and returns the resulting frame.
    pub fn step(&mut self) -> TelemetryFrame {
        let first = self.next_seq == 0;
        let mut events = Vec::new();
        let mut advanced = first;

        while let Some(kind) = self.queue.pop_front() {
            match kind {
                CommandKind::SetFrequency(f) => {
                    self.chip_config.target_hz = f;
                    events.push(EventKind::FrequencyChanged);
                }
                CommandKind::Pause => self.paused = true,
                CommandKind::Resume => self.paused = false,
                CommandKind::Trigger => {
                    self.clock(ChipInputs::TRIGGER);
                    events.push(EventKind::TriggerApplied);
                }
                CommandKind::Reset => {
                    self.clock(ChipInputs::RESET);
                    events.push(EventKind::Reset);
                }
            }
        }

        if !first && !self.paused {
            self.sim_ticks += 1;
            let due = (self.sim_ticks as f64 * self.config.sim_dt() * self.chip_config.clock_hz as f64).round() as u64;
            self.run_idle(due.saturating_sub(self.cycles));
            advanced = true;
        }

        let t_sim = self.sim_ticks as f64 * self.config.sim_dt();
        if advanced {
            self.raw = self.sample_source(t_sim);
            let level = if self.chip.normal_signal { 1.0 } else { -1.0 };
            self.recon = self.recon_filter.process(level);
        } else if let Source::Chaotic = self.source {
            self.raw = self.chip.chaotic_signal as f64;
        }

        if std::mem::take(&mut self.detected) {
            events.insert(0, EventKind::ThresholdDetect);
        }

        let frame = TelemetryFrame {
            seq: self.next_seq,
            t_sim,
            mode: self.chip.mode,
            raw: self.raw,
            out: u8::from(self.chip.normal_signal),
            recon: self.recon,
            events: events.into_iter().map(|ev| Event { ev, t_sim }).collect(),
        };
        self.next_seq += 1;
        frame
    }

    fn clock(&mut self, inputs: ChipInputs) {
        self.chip = tick(&self.chip, &self.chip_config, inputs);
        self.detected |= self.chip.detect_pulse;
        self.cycles += 1;
    }

    fn run_idle(&mut self, mut n: u64) {
        while n > 0 {
            if self.chip.mode == Mode::Entrained {
                self.chip.advance_idle(&self.chip_config, n);
                self.cycles += n;
                return;
            }
            self.clock(ChipInputs::IDLE);
            n -= 1;
        }
    }

    fn sample_source(&mut self, t_sim: f64) -> f64 {
        match &mut self.source {
            Source::Chaotic => self.chip.chaotic_signal as f64,
            Source::Replay(samples) => {
                let k = (t_sim * self.config.replay_rate() + 1e-9).floor() as usize;
                samples[k % samples.len()]
            }
            Source::Noise(rng) => rng.random_range(-1.0..=1.0),
        }
    }
}

/// Runs a session offline: `schedule` lists `(seq, command)` pairs applied
/// just before frame `seq` is produced, in order.
pub fn run_schedule(
    config: &SessionConfig,
    schedule: &[(u64, SessionCommand)],
    frames: u64,
) -> Result<(Vec<TelemetryFrame>, Vec<Ack>), SessionError> {
    let mut engine = SessionEngine::new(config)?;
    let mut out = Vec::with_capacity(frames as usize);
    let mut acks = Vec::new();
    let mut pending = schedule.iter().peekable();
    for seq in 0..frames {
        while let Some((_, cmd)) = pending.next_if(|(at, _)| *at <= seq) {
            acks.push(engine.apply(cmd));
        }
        out.push(engine.step());
    }
    Ok((out, acks))
}
