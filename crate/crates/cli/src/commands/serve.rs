use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, ValueEnum};
use hilts_core::chip::{ChipConfig, DEFAULT_TARGET_HZ, DEFAULT_THRESHOLD, VIRTUAL_CLOCK_HZ};
use hilts_core::eeg_dataset::SEIZURE_LABEL;
use hilts_session::config::{DEFAULT_BUFFER_FRAMES, DEFAULT_TELEMETRY_HZ};
use hilts_session::{start_session, SessionConfig, SourceConfig};
use serde::Serialize;

use super::parse_u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// The chip's own chaotic register.
    Chaotic,
    /// One dataset segment, looped at 178 Hz.
    Replay,
    /// Seeded uniform noise.
    Noise,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ServeArgs {
    /// Address to listen on.
    #[arg(long, env = "HILTS_BIND", default_value = "127.0.0.1")]
    pub bind: IpAddr,
    /// Port to listen on (0 picks a free port).
    #[arg(long, env = "HILTS_PORT", default_value_t = 8080)]
    pub port: u16,
    /// What feeds the raw telemetry column.
    #[arg(long, env = "HILTS_SOURCE", value_enum, default_value_t = SourceKind::Chaotic)]
    pub source: SourceKind,
    /// Dataset CSV for the replay source.
    #[arg(long, env = "HILTS_INPUT", default_value = "data/epileptic_seizure_recognition.csv")]
    pub input: PathBuf,
    /// Class label of the replayed segment.
    #[arg(long, env = "HILTS_LABEL", default_value_t = SEIZURE_LABEL, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub label: u8,
    /// Index of the replayed segment within its class, file order.
    #[arg(long, env = "HILTS_SEGMENT", default_value_t = 0)]
    pub segment: usize,
    /// Seed of the noise source.
    #[arg(long, env = "HILTS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Chip clock, Hz.
    #[arg(long, env = "HILTS_CLOCK", default_value_t = VIRTUAL_CLOCK_HZ)]
    pub clock: u64,
    /// Initial entrainment frequency, Hz.
    #[arg(long, env = "HILTS_TARGET", default_value_t = DEFAULT_TARGET_HZ)]
    pub target: f64,
    /// Detection threshold on the chaotic byte.
    #[arg(long, env = "HILTS_THRESHOLD", default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u8,
    /// LFSR seed, decimal or 0x-hex, nonzero.
    #[arg(long, env = "HILTS_LFSR_SEED", default_value = "0xACE1", value_parser = parse_u16)]
    pub lfsr_seed: u16,
    /// Enter ENTRAINED on the chip's own threshold detection.
    #[arg(long, env = "HILTS_AUTO_TRIGGER")]
    pub auto_trigger: bool,
    /// Telemetry frames per wall-clock second.
    #[arg(long, env = "HILTS_TELEMETRY_HZ", default_value_t = DEFAULT_TELEMETRY_HZ)]
    pub telemetry_hz: f64,
    /// Simulated seconds per wall-clock second.
    #[arg(long, env = "HILTS_TIME_SCALE", default_value_t = 1.0)]
    pub time_scale: f64,
    /// Frames a client may fall behind before it is disconnected.
    #[arg(long, env = "HILTS_BUFFER_FRAMES", default_value_t = DEFAULT_BUFFER_FRAMES)]
    pub buffer_frames: usize,
    /// JSON-lines session log (none: no log).
    #[arg(long, env = "HILTS_LOG")]
    pub log: Option<PathBuf>,
    /// Stop after this many wall-clock seconds (none: until interrupted).
    #[arg(long, env = "HILTS_DURATION")]
    pub duration: Option<f64>,
}

impl ServeArgs {
    pub fn session_config(&self) -> anyhow::Result<SessionConfig> {
        let source = match self.source {
            SourceKind::Chaotic => SourceConfig::ChaoticEmulator,
            SourceKind::Noise => SourceConfig::Noise { seed: self.seed },
            SourceKind::Replay => SourceConfig::from_dataset(&self.input, self.label, self.segment)?,
        };
        let config = SessionConfig {
            source,
            chip: ChipConfig {
                clock_hz: self.clock,
                target_hz: self.target,
                threshold: self.threshold,
                lfsr_seed: self.lfsr_seed,
                auto_trigger: self.auto_trigger,
            },
            telemetry_hz: self.telemetry_hz,
            time_scale: self.time_scale,
            log_path: self.log.clone(),
            buffer_frames: self.buffer_frames,
        };
        config.validate()?;
        Ok(config)
    }
}

pub fn run(args: &ServeArgs) -> anyhow::Result<()> {
    if let Some(d) = args.duration {
        anyhow::ensure!(d > 0.0 && d.is_finite(), "duration must be positive, got {d}");
    }
    let config = args.session_config()?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(serve(args, config))
}

async fn serve(args: &ServeArgs, config: SessionConfig) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(SocketAddr::new(args.bind, args.port)).await?;
    let addr = listener.local_addr()?;
    let session = start_session(config).await?;
    println!("listening on ws://{addr}/ws");

    let duration = args.duration;
    let shutdown = async move {
        match duration {
            Some(d) => tokio::time::sleep(Duration::from_secs_f64(d)).await,
            None => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    };
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(hilts_session::server::serve(listener, session.client(), async {
        let _ = stop_rx.await;
    }));

    shutdown.await;
    // Stop the session first so connected clients get a close message.
    let frames = session.stop().await?;
    let _ = stop_tx.send(());
    server.await??;
    tracing::info!(frames, "session stopped");
    Ok(())
}
