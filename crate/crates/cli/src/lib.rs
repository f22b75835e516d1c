//! Batch entry points: each subcommand reads its inputs, writes plain CSV
//! and JSON series into `--out`, and finishes with a `manifest.json` that
//! records the resolved parameters and every file written. Reruns with the
//! same inputs and flags produce byte-identical outputs; only the manifest
//! carries wall-clock data.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod manifest;

pub use commands::{AnalyzeArgs, BenchmarkArgs, CaptureArgs, EmulateArgs, EntrainArgs, ServeArgs};
pub use manifest::{OutputDir, RunManifest, MANIFEST_FILE};

#[derive(Debug, Parser)]
#[command(name = "hilts", version, about = "Seizure-entrainment workbench", propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-class average waveforms, band powers and class-1 entropies.
    Analyze(AnalyzeArgs),
    /// One class average as analogue, digitized and log-spectrum series.
    Benchmark(BenchmarkArgs),
    /// Cycle-level chip trace and change dump.
    Emulate(EmulateArgs),
    /// Noise, trigger, then forced oscillator response and lock report.
    Entrain(EntrainArgs),
    /// Logic-analyzer capture to pulse statistics and spectra.
    Capture(CaptureArgs),
    /// Live session over WebSocket.
    Serve(ServeArgs),
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze(a) => commands::analyze::run(&a),
        Command::Benchmark(a) => commands::benchmark::run(&a),
        Command::Emulate(a) => commands::emulate::run(&a),
        Command::Entrain(a) => commands::entrain::run(&a),
        Command::Capture(a) => commands::capture::run(&a),
        Command::Serve(a) => commands::serve::run(&a),
    }
}

/// Parses `std::env::args`, runs, and maps failures to exit codes: 2 for
/// usage errors, 1 for everything else with a one-line diagnostic.
pub fn main_from_env() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code.clamp(0, 255) as u8);
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("HILTS_LOG_LEVEL")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
