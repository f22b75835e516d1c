//! JSON-lines session log: a `start` record with the full config, then
//! `cmd`/`ack`/`frame` records in processing order, then `stop`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::SessionConfig;
use crate::engine::run_schedule;
use crate::error::SessionError;
use crate::protocol::{Message, TelemetryFrame};

pub struct SessionLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl SessionLog {
    pub fn create(path: &Path) -> Result<Self, SessionError> {
        let file = File::create(path).map_err(|source| SessionError::Log {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, msg: &Message) -> Result<(), SessionError> {
        writeln!(self.out, "{}", msg.to_json()).map_err(|source| SessionError::Log {
            path: self.path.clone(),
            source,
        })
    }

    pub fn flush(&mut self) -> Result<(), SessionError> {
        self.out.flush().map_err(|source| SessionError::Log {
            path: self.path.clone(),
            source,
        })
    }
}

pub fn read_log(path: &Path) -> Result<Vec<Message>, SessionError> {
    let file = File::open(path).map_err(|source| SessionError::Log {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| SessionError::Log {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let msg = serde_json::from_str(&line).map_err(|e| SessionError::LogFormat {
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(msg);
    }
    Ok(out)
}

/// Recorded frames and a fresh run of the same config and accepted-command
/// schedule, for comparison.
pub struct Replay {
    pub config: SessionConfig,
    pub recorded: Vec<TelemetryFrame>,
    pub replayed: Vec<TelemetryFrame>,
}

pub fn replay_log(records: &[Message]) -> Result<Replay, SessionError> {
    let Some(Message::Start(start)) = records.first() else {
        return Err(SessionError::LogFormat {
            line: 1,
            msg: "log does not begin with a start record".into(),
        });
    };

    let mut schedule = Vec::new();
    let mut pending = std::collections::HashMap::new();
    let mut recorded = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        match rec {
            Message::Cmd(c) => {
                pending.insert(c.id.clone(), c.clone());
            }
            Message::Ack(a) if a.ok => {
                let cmd = pending.remove(&a.id).ok_or_else(|| SessionError::LogFormat {
                    line: i + 1,
                    msg: format!("ack for unknown command {:?}", a.id),
                })?;
                let client = cmd.client.clone().unwrap_or_default();
                let parsed = cmd.parse(&client).map_err(|ack| SessionError::LogFormat {
                    line: i + 1,
                    msg: ack.err.unwrap_or_default(),
                })?;
                let seq = a.applied_at_seq.ok_or_else(|| SessionError::LogFormat {
                    line: i + 1,
                    msg: "accepted ack without applied_at_seq".into(),
                })?;
                schedule.push((seq, parsed));
            }
            Message::Frame(f) => recorded.push(f.clone()),
            _ => {}
        }
    }

    let (replayed, _) = run_schedule(&start.config, &schedule, recorded.len() as u64)?;
    Ok(Replay {
        config: start.config.clone(),
        recorded,
        replayed,
    })
}
