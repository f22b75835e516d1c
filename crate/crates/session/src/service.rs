//! Wall-clock-paced session loop.
//!
//! One task owns the [`SessionEngine`]. Commands reach it through a single
//! queue and are applied in arrival order at the next telemetry tick;
//! frames fan out through a broadcast channel whose capacity is the
//! per-subscriber buffer. A subscriber that falls further behind is closed
//! with [`CloseReason::Overflow`]; the loop itself never waits on clients.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio::time::{interval_at, Instant, MissedTickBehavior};

use crate::config::SessionConfig;
use crate::engine::SessionEngine;
use crate::error::SessionError;
use crate::log::SessionLog;
use crate::protocol::{Ack, Close, CloseReason, Message, SessionCommand, Start, Stop, TelemetryFrame, PROTOCOL_VERSION};

const COMMAND_QUEUE: usize = 1024;

type Envelope = (SessionCommand, oneshot::Sender<Ack>);

/// Cheap, cloneable access to a running session.
#[derive(Clone)]
pub struct SessionClient {
    commands: mpsc::Sender<Envelope>,
    frames: Arc<broadcast::Receiver<Arc<TelemetryFrame>>>,
    close: Arc<Mutex<Option<Close>>>,
}

impl SessionClient {
    /// Queues a command and waits for its acknowledgment.
    pub async fn send(&self, cmd: SessionCommand) -> Result<Ack, SessionError> {
        let (tx, rx) = oneshot::channel();
        self.commands.send((cmd, tx)).await.map_err(|_| SessionError::Stopped)?;
        rx.await.map_err(|_| SessionError::Stopped)
    }

    /// Stream of frames from the next one produced onward.
    pub fn subscribe(&self) -> Subscription {
        Subscription {
            rx: self.frames.resubscribe(),
            close: Arc::clone(&self.close),
            done: false,
        }
    }
}

pub enum SubscriptionItem {
    Frame(Arc<TelemetryFrame>),
    Closed(Close),
}

pub struct Subscription {
    rx: broadcast::Receiver<Arc<TelemetryFrame>>,
    close: Arc<Mutex<Option<Close>>>,
    done: bool,
}

impl Subscription {
    /// Next frame, then exactly one `Closed` item, then `None`.
    pub async fn next(&mut self) -> Option<SubscriptionItem> {
        if self.done {
            return None;
        }
        match self.rx.recv().await {
            Ok(f) => Some(SubscriptionItem::Frame(f)),
            Err(broadcast::error::RecvError::Lagged(n)) => {
                self.done = true;
                Some(SubscriptionItem::Closed(Close {
                    reason: CloseReason::Overflow,
                    detail: Some(format!("subscriber fell {n} frames behind")),
                }))
            }
            Err(broadcast::error::RecvError::Closed) => {
                self.done = true;
                let close = self.close.lock().expect("close lock").clone().unwrap_or(Close {
                    reason: CloseReason::Stopped,
                    detail: None,
                });
                Some(SubscriptionItem::Closed(close))
            }
        }
    }
}

pub struct SessionHandle {
    client: SessionClient,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<Result<u64, SessionError>>,
}

impl SessionHandle {
    pub fn client(&self) -> SessionClient {
        self.client.clone()
    }

    pub fn subscribe(&self) -> Subscription {
        self.client.subscribe()
    }

    pub async fn send(&self, cmd: SessionCommand) -> Result<Ack, SessionError> {
        self.client.send(cmd).await
    }

    /// Stops the loop, closes every subscription and returns the number of
    /// frames produced.
    pub async fn stop(mut self) -> Result<u64, SessionError> {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        self.task.await.map_err(|_| SessionError::Stopped)?
    }

    /// Resolves when the loop ends on its own (e.g. a log write failure).
    pub async fn wait(self) -> Result<u64, SessionError> {
        let SessionHandle { stop, task, .. } = self;
        let res = task.await.map_err(|_| SessionError::Stopped)?;
        drop(stop);
        res
    }
}

/// Validates `config`, opens the log if configured and starts the loop.
/// The first frame (seq 0) is produced one telemetry interval later, so a
/// subscriber taken right after this returns sees it.
pub async fn start_session(config: SessionConfig) -> Result<SessionHandle, SessionError> {
    let engine = SessionEngine::new(&config)?;
    let mut log = match &config.log_path {
        Some(p) => Some(SessionLog::create(p)?),
        None => None,
    };
    if let Some(log) = log.as_mut() {
        // The log's own location is not part of what it records.
        let recorded = SessionConfig {
            log_path: None,
            ..config.clone()
        };
        log.write(&Message::Start(Start {
            protocol: PROTOCOL_VERSION,
            config: recorded,
        }))?;
        log.flush()?;
    }

    let (cmd_tx, cmd_rx) = mpsc::channel(COMMAND_QUEUE);
    let (frame_tx, frame_rx) = broadcast::channel(config.buffer_frames);
    let (stop_tx, stop_rx) = oneshot::channel();
    let close = Arc::new(Mutex::new(None));
    let period = Duration::from_secs_f64(1.0 / config.telemetry_hz);

    let task = tokio::spawn(run_loop(engine, log, cmd_rx, frame_tx, stop_rx, Arc::clone(&close), period));
    Ok(SessionHandle {
        client: SessionClient {
            commands: cmd_tx,
            frames: Arc::new(frame_rx),
            close,
        },
        stop: Some(stop_tx),
        task,
    })
}

async fn run_loop(
    mut engine: SessionEngine,
    mut log: Option<SessionLog>,
    mut commands: mpsc::Receiver<Envelope>,
    frames: broadcast::Sender<Arc<TelemetryFrame>>,
    mut stop: oneshot::Receiver<()>,
    close: Arc<Mutex<Option<Close>>>,
    period: Duration,
) -> Result<u64, SessionError> {
    let mut ticker = interval_at(Instant::now() + period, period);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);

    let outcome = loop {
        tokio::select! {
            biased;
            _ = &mut stop => break Ok(()),
            _ = ticker.tick() => {
                if let Err(e) = tick_once(&mut engine, log.as_mut(), &mut commands, &frames) {
                    break Err(e);
                }
            }
        }
    };

    let produced = engine.next_seq();
    let reason = match &outcome {
        Ok(()) => Close {
            reason: CloseReason::Stopped,
            detail: None,
        },
        Err(e) => {
            tracing::error!("session halted: {e}");
            Close {
                reason: CloseReason::Error,
                detail: Some(e.to_string()),
            }
        }
    };
    if let (Ok(()), Some(log)) = (&outcome, log.as_mut()) {
        log.write(&Message::Stop(Stop {
            frames: produced,
            reason: reason.reason.clone(),
        }))?;
        log.flush()?;
    }
    *close.lock().expect("close lock") = Some(reason);
    drop(frames);
    outcome.map(|()| produced)
}

fn tick_once(
    engine: &mut SessionEngine,
    mut log: Option<&mut SessionLog>,
    commands: &mut mpsc::Receiver<Envelope>,
    frames: &broadcast::Sender<Arc<TelemetryFrame>>,
) -> Result<(), SessionError> {
    while let Ok((cmd, reply)) = commands.try_recv() {
        let ack = engine.apply(&cmd);
        if let Some(log) = log.as_mut() {
            log.write(&Message::Cmd(cmd.to_wire()))?;
            log.write(&Message::Ack(ack.clone()))?;
        }
        let _ = reply.send(ack);
    }
    let frame = Arc::new(engine.step());
    if let Some(log) = log.as_mut() {
        log.write(&Message::Frame((*frame).clone()))?;
        log.flush()?;
    }
    // No receivers is fine; the loop keeps time regardless.
    let _ = frames.send(frame);
    Ok(())
}
