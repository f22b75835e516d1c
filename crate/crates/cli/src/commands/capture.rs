use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use hilts_core::capture::{channel_to_pulse_train, parse_capture_csv, pulse_stats, pulse_train_csv, DEFAULT_CHANNEL};
use hilts_core::chip::{chip_to_pulse_train, realized_frequency, run_trace, ChipConfig, DEFAULT_TARGET_HZ, VIRTUAL_CLOCK_HZ};
use hilts_core::dsp::{
    band_power, dominant_frequency, power_spectrum, reconstruct_analog, BAND_RANGE_HIGH, BAND_RANGE_LOW,
    DEFAULT_RECONSTRUCTION_CUTOFF_HZ,
};
use hilts_core::eeg_dataset::SEGMENT_RATE_HZ;
use hilts_core::PulseTrain;
use serde::Serialize;

use super::check_trace_len;
use crate::manifest::OutputDir;

/// Half-width of the band around the reference frequency used for the
/// peak share, Hz.
const PEAK_HALF_WIDTH_HZ: f64 = 0.5;

#[derive(Debug, Clone, Args, Serialize)]
pub struct CaptureArgs {
    /// Logic-analyzer CSV, dense or transitions-only.
    #[arg(long, env = "HILTS_FILE")]
    pub file: PathBuf,
    /// Channel number to analyse.
    #[arg(long, env = "HILTS_CHANNEL", default_value_t = DEFAULT_CHANNEL)]
    pub channel: u32,
    /// Resampling rate for the pulse train, Hz.
    #[arg(long, env = "HILTS_RATE", default_value_t = SEGMENT_RATE_HZ)]
    pub rate: f64,
    /// Reconstruction low-pass cutoff, Hz.
    #[arg(long, env = "HILTS_CUTOFF", default_value_t = DEFAULT_RECONSTRUCTION_CUTOFF_HZ)]
    pub cutoff: f64,
    /// Clock of the emulator reference run, Hz.
    #[arg(long, env = "HILTS_REF_CLOCK", default_value_t = VIRTUAL_CLOCK_HZ)]
    pub ref_clock: u64,
    /// Target frequency of the emulator reference run, Hz.
    #[arg(long, env = "HILTS_REF_TARGET", default_value_t = DEFAULT_TARGET_HZ)]
    pub ref_target: f64,
    /// Output directory.
    #[arg(long, env = "HILTS_OUT", default_value = "out/capture")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Comparison {
    capture_dominant_hz: f64,
    reference_dominant_hz: f64,
    reference_realized_hz: f64,
    /// Power within ±0.5 Hz of the reference frequency over 0.5-40 Hz power.
    capture_peak_share: f64,
    reference_peak_share: f64,
}

fn peak_share(spec: &hilts_core::dsp::PowerSpectrum, f: f64) -> anyhow::Result<f64> {
    let total = band_power(spec, BAND_RANGE_LOW, BAND_RANGE_HIGH)?;
    let peak = band_power(spec, f - PEAK_HALF_WIDTH_HZ, f + PEAK_HALF_WIDTH_HZ)?;
    Ok(if total > 0.0 { peak / total } else { 0.0 })
}

pub fn run(args: &CaptureArgs) -> anyhow::Result<()> {
    let cap = parse_capture_csv(&args.file).with_context(|| format!("cannot read {}", args.file.display()))?;
    let stats = pulse_stats(&cap, args.channel)?;
    let train = channel_to_pulse_train(&cap, args.channel, args.rate)?;
    let recon = reconstruct_analog(&train, args.rate, args.cutoff)?;
    let spec = power_spectrum(&recon)?;

    // Emulator reference over the same span, triggered at cycle 0.
    let ref_config = ChipConfig {
        clock_hz: args.ref_clock,
        target_hz: args.ref_target,
        ..ChipConfig::default()
    };
    ref_config.validate()?;
    let cycles = ((train.len() as f64 / args.rate) * args.ref_clock as f64).ceil() as u64 + 1;
    check_trace_len(cycles)?;
    let trace = run_trace(&ref_config, cycles, Some(0), None)?;
    let ref_bits = chip_to_pulse_train(&trace, args.rate)?;
    let ref_train = PulseTrain::new(ref_bits.bits()[..train.len()].to_vec(), args.rate)?;
    let ref_recon = reconstruct_analog(&ref_train, args.rate, args.cutoff)?;
    let ref_spec = power_spectrum(&ref_recon)?;
    let realized = realized_frequency(&ref_config);

    let mut out = OutputDir::create(&args.out)?;
    out.write_json("stats.json", &stats)?;
    out.write("pulse_train.csv", &pulse_train_csv(&train))?;
    let mut recon_csv = String::from("time_s,capture,reference\n");
    for (k, (a, b)) in recon.samples().iter().zip(ref_recon.samples()).enumerate() {
        recon_csv.push_str(&format!("{},{a},{b}\n", recon.time_of(k)));
    }
    out.write("reconstructed.csv", &recon_csv)?;
    let mut spec_csv = String::from("frequency_hz,capture_power,reference_power\n");
    for ((f, a), b) in spec.frequencies.iter().zip(&spec.power).zip(&ref_spec.power) {
        spec_csv.push_str(&format!("{f},{a},{b}\n"));
    }
    out.write("spectrum.csv", &spec_csv)?;
    out.write_json(
        "comparison.json",
        &Comparison {
            capture_dominant_hz: dominant_frequency(&spec, BAND_RANGE_LOW)?,
            reference_dominant_hz: dominant_frequency(&ref_spec, BAND_RANGE_LOW)?,
            reference_realized_hz: realized,
            capture_peak_share: peak_share(&spec, realized)?,
            reference_peak_share: peak_share(&ref_spec, realized)?,
        },
    )?;
    out.finish("capture", &[&args.file], args)?;
    Ok(())
}
