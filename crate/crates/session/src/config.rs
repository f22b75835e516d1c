use std::path::{Path, PathBuf};

use hilts_core::chip::ChipConfig;
use hilts_core::eeg_dataset::{extract_class, load_dataset, SEGMENT_RATE_HZ};
use serde::{Deserialize, Serialize};

use crate::error::SessionError;

pub const DEFAULT_TELEMETRY_HZ: f64 = 30.0;
pub const DEFAULT_BUFFER_FRAMES: usize = 256;
/// Upper bound on chip cycles emulated per telemetry frame.
pub const MAX_CYCLES_PER_FRAME: f64 = 5_000_000.0;

/// What feeds the `raw` telemetry column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceConfig {
    /// The chip's own chaotic register.
    ChaoticEmulator,
    /// One dataset segment played back cyclically at its native 178 Hz.
    DatasetReplay {
        label: u8,
        index: usize,
        samples: Vec<f64>,
    },
    /// Seeded uniform noise in [-1, 1], one sample per simulation tick.
    Noise { seed: u64 },
}

impl SourceConfig {
    /// Loads segment `index` (0-based, file order) of class `label`.
    pub fn from_dataset(path: &Path, label: u8, index: usize) -> Result<Self, SessionError> {
        let all = load_dataset(path)?;
        let class = extract_class(&all, label)?;
        let seg = class.get(index).ok_or_else(|| {
            SessionError::Config(format!(
                "class {label} has {} segments, index {index} is out of range",
                class.len()
            ))
        })?;
        Ok(SourceConfig::DatasetReplay {
            label,
            index,
            samples: seg.samples().to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub source: SourceConfig,
    pub chip: ChipConfig,
    pub telemetry_hz: f64,
    /// Simulated seconds per wall-clock second.
    pub time_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_path: Option<PathBuf>,
    /// Frames a subscriber may fall behind before it is disconnected.
    pub buffer_frames: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            source: SourceConfig::ChaoticEmulator,
            chip: ChipConfig::default(),
            telemetry_hz: DEFAULT_TELEMETRY_HZ,
            time_scale: 1.0,
            log_path: None,
            buffer_frames: DEFAULT_BUFFER_FRAMES,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: String| Err(SessionError::Config(m));
        if !(1.0..=240.0).contains(&self.telemetry_hz) {
            return bad(format!("telemetry rate {} Hz is outside 1..=240", self.telemetry_hz));
        }
        if !(self.time_scale > 0.0 && self.time_scale.is_finite()) {
            return bad(format!("time scale must be positive, got {}", self.time_scale));
        }
        if self.buffer_frames == 0 {
            return bad("subscriber buffer must hold at least one frame".into());
        }
        self.chip.validate()?;
        let per_frame = self.chip.clock_hz as f64 * self.sim_dt();
        if per_frame > MAX_CYCLES_PER_FRAME {
            return bad(format!(
                "{per_frame:.0} chip cycles per frame exceeds the live budget of {MAX_CYCLES_PER_FRAME}; \
                 lower the clock or time scale, or raise the telemetry rate"
            ));
        }
        match &self.source {
            SourceConfig::DatasetReplay { samples, label, .. } => {
                if samples.is_empty() {
                    return bad("replay segment is empty".into());
                }
                if !(1..=5).contains(label) {
                    return bad(format!("class label {label} is outside 1..=5"));
                }
                if samples.iter().any(|v| !v.is_finite()) {
                    return bad("replay segment contains non-finite samples".into());
                }
            }
            SourceConfig::ChaoticEmulator | SourceConfig::Noise { .. } => {}
        }
        Ok(())
    }

    /// Simulated seconds between frames.
    pub fn sim_dt(&self) -> f64 {
        self.time_scale / self.telemetry_hz
    }

    /// Rate of the replayed segment, Hz of simulated time.
    pub fn replay_rate(&self) -> f64 {
        SEGMENT_RATE_HZ
    }
}
