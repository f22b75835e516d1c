//! Live entrainment session.
//!
//! A [`SessionEngine`] advances the chip emulator one telemetry frame at a
//! time. [`start_session`] paces it against the wall clock, fans frames out
//! to any number of subscribers and serializes operator commands. The
//! [`server`] module exposes the same over WebSocket, and every session can
//! be written to a JSON-lines log that [`replay_log`] reproduces exactly.

pub mod config;
pub mod engine;
pub mod error;
pub mod log;
pub mod protocol;
pub mod server;
pub mod service;

pub use config::{SessionConfig, SourceConfig};
pub use engine::{run_schedule, SessionEngine};
pub use error::SessionError;
pub use log::{read_log, replay_log, Replay, SessionLog};
pub use protocol::{Ack, CloseReason, CommandKind, Message, SessionCommand, TelemetryFrame};
pub use service::{start_session, SessionClient, SessionHandle, Subscription, SubscriptionItem};
