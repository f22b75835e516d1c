//! Wire and log message types.
//!
//! Every message is a JSON object tagged by `"type"`. Frames, acks and the
//! terminal `close` message flow server → client; `cmd` flows client →
//! server. The session log is JSON lines of the same objects plus `start`
//! and `stop` records.

use hilts_core::chip::Mode;
use serde::{Deserialize, Serialize};

use crate::config::SessionConfig;

/// Lowest frequency accepted by `set_frequency`, Hz.
pub const MIN_FREQUENCY_HZ: f64 = 1.0;
/// Highest frequency accepted by `set_frequency`, Hz.
pub const MAX_FREQUENCY_HZ: f64 = 40.0;

/// Version tag written into `start` records.
pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ThresholdDetect,
    TriggerApplied,
    FrequencyChanged,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub ev: EventKind,
    pub t_sim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub seq: u64,
    pub t_sim: f64,
    pub mode: Mode,
    /// Current source sample.
    pub raw: f64,
    /// Chip `normal_signal`, 0 or 1.
    pub out: u8,
    /// Causally smoothed output.
    pub recon: f64,
    pub events: Vec<Event>,
}

/// Command exactly as it appears on the wire; `kind` is kept as text so
/// unknown kinds can be acknowledged as rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCommand {
    pub id: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Sender, recorded in the session log only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CommandKind {
    Trigger,
    Reset,
    SetFrequency(f64),
    Pause,
    Resume,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Trigger => "trigger",
            CommandKind::Reset => "reset",
            CommandKind::SetFrequency(_) => "set_frequency",
            CommandKind::Pause => "pause",
            CommandKind::Resume => "resume",
        }
    }

    fn value(self) -> Option<f64> {
        match self {
            CommandKind::SetFrequency(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionCommand {
    pub id: String,
    pub client_id: String,
    pub kind: CommandKind,
}

impl SessionCommand {
    pub fn new(id: impl Into<String>, client_id: impl Into<String>, kind: CommandKind) -> Self {
        Self {
            id: id.into(),
            client_id: client_id.into(),
            kind,
        }
    }

    pub fn to_wire(&self) -> WireCommand {
        WireCommand {
            id: self.id.clone(),
            kind: self.kind.name().to_string(),
            value: self.kind.value(),
            client: Some(self.client_id.clone()),
        }
    }
}

impl WireCommand {
    /// Interprets the command; an unknown kind or a missing value yields
    /// the rejecting ack to send back.
    pub fn parse(&self, client_id: &str) -> Result<SessionCommand, Ack> {
        let kind = match self.kind.as_str() {
            "trigger" => CommandKind::Trigger,
            "reset" => CommandKind::Reset,
            "pause" => CommandKind::Pause,
            "resume" => CommandKind::Resume,
            "set_frequency" => match self.value {
                Some(v) => CommandKind::SetFrequency(v),
                None => return Err(Ack::rejected(&self.id, "set_frequency needs a value")),
            },
            other => return Err(Ack::rejected(&self.id, format!("unknown command kind {other:?}"))),
        };
        Ok(SessionCommand::new(self.id.clone(), client_id, kind))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub id: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applied_at_seq: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub err: Option<String>,
}

impl Ack {
    pub fn applied(id: &str, seq: u64) -> Self {
        Self {
            id: id.to_string(),
            ok: true,
            applied_at_seq: Some(seq),
            err: None,
        }
    }

    pub fn rejected(id: &str, err: impl Into<String>) -> Self {
        Self {
            id: id.to_string(),
            ok: false,
            applied_at_seq: None,
            err: Some(err.into()),
        }
    }
}

/// Why a telemetry stream ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloseReason {
    /// The session was stopped.
    Stopped,
    /// The subscriber fell more than the buffer capacity behind.
    Overflow,
    /// The session halted on an error (e.g. the log could not be written).
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Close {
    pub reason: CloseReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Start {
    pub protocol: u32,
    pub config: SessionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    /// Frames emitted over the session's lifetime.
    pub frames: u64,
    pub reason: CloseReason,
}

/// Any message on the wire or in the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Frame(TelemetryFrame),
    Cmd(WireCommand),
    Ack(Ack),
    Close(Close),
    Start(Start),
    Stop(Stop),
}

impl Message {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }
}
