//! Logic-analyzer CSV captures.
//!
//! Two layouts are accepted, both with a header row whose first column is
//! the time in seconds (any header starting with `Time`, case-insensitive)
//! followed by one `0`/`1` column per channel:
//!
//! ```text
//! Time [s],Channel 0,Channel 4
//! 0.000000000,0,1
//! 0.000100000,0,1
//! ...
//! ```
//!
//! A dense export has one row per sample; a transitions export has a row
//! for the initial levels and one row per level change. Both are reduced
//! to the same per-channel edge lists. Channel numbers are read from the
//! trailing integer of each channel header; headers without one are
//! numbered by position.

use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::chip::{Signal, SignalChange};
use crate::error::{invalid, parse_err, Error, Result};
use crate::signal::PulseTrain;

/// Channel carrying the chip output in the reference bench setup.
pub const DEFAULT_CHANNEL: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub time: f64,
    pub level: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelEdges {
    pub number: u32,
    pub name: String,
    pub initial_level: u8,
    /// Strictly ascending in time, levels alternating.
    pub edges: Vec<Edge>,
}

impl ChannelEdges {
    /// Level in force at time `t`. A sample exactly at an edge takes the
    /// post-edge level; `tol` absorbs rounding of sample instants.
    pub fn level_at(&self, t: f64, tol: f64) -> u8 {
        let idx = self.edges.partition_point(|e| e.time <= t + tol);
        if idx == 0 {
            self.initial_level
        } else {
            self.edges[idx - 1].level
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DigitalCapture {
    pub channels: Vec<ChannelEdges>,
    pub start_time: f64,
    pub end_time: f64,
}

impl DigitalCapture {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, number: u32) -> Result<&ChannelEdges> {
        self.channels.iter().find(|c| c.number == number).ok_or_else(|| {
            let have: Vec<u32> = self.channels.iter().map(|c| c.number).collect();
            invalid(format!("channel {number} not in capture (have {have:?})"))
        })
    }

    /// Transitions-format CSV: one row at `start_time` with initial levels,
    /// one row per edge (any channel), and a closing row at `end_time`.
    pub fn to_transitions_csv(&self) -> String {
        let mut header = vec!["Time [s]".to_string()];
        header.extend(self.channels.iter().map(|c| c.name.clone()));
        let mut out = header.join(",") + "\n";

        let mut times: Vec<f64> = self
            .channels
            .iter()
            .flat_map(|c| c.edges.iter().map(|e| e.time))
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();

        let mut row = |t: f64| {
            let levels: Vec<String> = self
                .channels
                .iter()
                .map(|c| c.level_at(t, 0.0).to_string())
                .collect();
            out.push_str(&format!("{t},{}\n", levels.join(",")));
        };
        row(self.start_time);
        for &t in times.iter().filter(|&&t| t > self.start_time) {
            row(t);
        }
        if self.end_time > times.last().copied().unwrap_or(self.start_time) {
            row(self.end_time);
        }
        out
    }
}

pub fn parse_capture_csv(path: impl AsRef<Path>) -> Result<DigitalCapture> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_capture(file)
}

pub fn read_capture<R: Read>(reader: R) -> Result<DigitalCapture> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();

    let time_col = headers
        .iter()
        .position(|h| h.to_ascii_lowercase().starts_with("time"))
        .ok_or_else(|| parse_err(1, "no time column (expected a header starting with \"Time\")"))?;
    let channel_cols: Vec<usize> = (0..headers.len()).filter(|&i| i != time_col).collect();
    if channel_cols.is_empty() {
        return Err(parse_err(1, "capture has a time column but no channels"));
    }

    let mut channels: Vec<ChannelEdges> = channel_cols
        .iter()
        .enumerate()
        .map(|(pos, &col)| {
            let name = headers[col].to_string();
            ChannelEdges {
                number: trailing_number(&name).unwrap_or(pos as u32),
                name,
                initial_level: 0,
                edges: Vec::new(),
            }
        })
        .collect();

    let mut start = None;
    let mut prev_time = f64::NEG_INFINITY;
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let t: f64 = record[time_col]
            .parse()
            .map_err(|_| parse_err(line, format!("time {:?} is not numeric", &record[time_col])))?;
        if !t.is_finite() || t <= prev_time {
            return Err(parse_err(line, format!("time {t} does not increase")));
        }
        prev_time = t;

        for (ch, &col) in channels.iter_mut().zip(&channel_cols) {
            let level = match &record[col] {
                "0" => 0u8,
                "1" => 1u8,
                other => {
                    return Err(parse_err(
                        line,
                        format!("{} value {other:?} is not 0 or 1", ch.name),
                    ))
                }
            };
            if start.is_none() {
                ch.initial_level = level;
            } else {
                let current = ch.edges.last().map_or(ch.initial_level, |e| e.level);
                if level != current {
                    ch.edges.push(Edge { time: t, level });
                }
            }
        }
        start.get_or_insert(t);
    }

    let start_time = start.ok_or_else(|| parse_err(2, "capture has no data rows"))?;
    Ok(DigitalCapture {
        channels,
        start_time,
        end_time: prev_time,
    })
}

fn trailing_number(name: &str) -> Option<u32> {
    let digits: String = name
        .chars()
        .rev()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect();
    if digits.is_empty() {
        return None;
    }
    digits.chars().rev().collect::<String>().parse().ok()
}

/// Zero-order-hold sampling of one channel at `sample_rate` from the
/// capture start through its end time (both inclusive where they fall on
/// the sample grid).
pub fn channel_to_pulse_train(capture: &DigitalCapture, channel: u32, sample_rate: f64) -> Result<PulseTrain> {
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(invalid("sample rate must be positive"));
    }
    let ch = capture.channel(channel)?;
    let span = capture.end_time - capture.start_time;
    let n = (span * sample_rate + 1e-6).floor() as usize + 1;
    let tol = 1e-6 / sample_rate;
    let bits = (0..n)
        .map(|k| ch.level_at(capture.start_time + k as f64 / sample_rate, tol))
        .collect();
    PulseTrain::new(bits, sample_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseStats {
    /// `(rising_edges − 1) / (t_last_rise − t_first_rise)`.
    pub mean_frequency: f64,
    /// RMS deviation of rising-to-rising periods from their mean, seconds.
    pub period_jitter_rms: f64,
    /// High-time fraction between the first and last rising edge.
    pub duty_cycle: f64,
    /// Rising plus falling edges on the channel.
    pub edge_count: usize,
}

pub fn pulse_stats(capture: &DigitalCapture, channel: u32) -> Result<PulseStats> {
    let ch = capture.channel(channel)?;
    let rises: Vec<f64> = ch.edges.iter().filter(|e| e.level == 1).map(|e| e.time).collect();
    if rises.len() < 3 {
        return Err(Error::Measurement(format!(
            "pulse statistics need at least 3 rising edges, channel {channel} has {}",
            rises.len()
        )));
    }
    let periods: Vec<f64> = rises.windows(2).map(|w| w[1] - w[0]).collect();
    let span = rises[rises.len() - 1] - rises[0];
    let mean_period = span / periods.len() as f64;
    let jitter =
        (periods.iter().map(|p| (p - mean_period).powi(2)).sum::<f64>() / periods.len() as f64).sqrt();

    let (first, last) = (rises[0], rises[rises.len() - 1]);
    let mut high = 0.0;
    let mut level = 1u8;
    let mut since = first;
    for e in ch.edges.iter().filter(|e| e.time > first && e.time <= last) {
        if level == 1 {
            high += e.time - since;
        }
        level = e.level;
        since = e.time;
    }

    Ok(PulseStats {
        mean_frequency: periods.len() as f64 / span,
        period_jitter_rms: jitter,
        duty_cycle: (high / span).clamp(0.0, 1.0),
        edge_count: ch.edges.len(),
    })
}

/// Builds a one-channel capture from a chip change dump, taking edge times
/// from `cycle / clock_hz`.
pub fn capture_from_changes(
    changes: &[SignalChange],
    signal: Signal,
    clock_hz: u64,
    n_cycles: u64,
    channel: u32,
) -> Result<DigitalCapture> {
    let clock = clock_hz as f64;
    let mut relevant = changes.iter().filter(|c| c.signal == signal);
    let first = relevant
        .next()
        .ok_or_else(|| invalid(format!("change dump has no {} entries", signal.name())))?;
    let to_level = |v: u64| -> Result<u8> {
        u8::try_from(v)
            .ok()
            .filter(|&l| l <= 1)
            .ok_or_else(|| invalid(format!("{} value {v} is not binary", signal.name())))
    };
    let initial_level = to_level(first.new_value)?;
    let edges = relevant
        .map(|c| {
            Ok(Edge {
                time: c.cycle as f64 / clock,
                level: to_level(c.new_value)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DigitalCapture {
        channels: vec![ChannelEdges {
            number: channel,
            name: format!("Channel {channel}"),
            initial_level,
            edges,
        }],
        start_time: first.cycle as f64 / clock,
        end_time: n_cycles.saturating_sub(1) as f64 / clock,
    })
}

/// CSV `time_s,level` rendering of a pulse train.
pub fn pulse_train_csv(p: &PulseTrain) -> String {
    let mut s = String::from("time_s,level\n");
    for (k, b) in p.bits().iter().enumerate() {
        s.push_str(&format!("{},{}\n", k as f64 / p.sample_rate(), b));
    }
    s
}
