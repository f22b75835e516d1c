use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use hilts_core::capture::pulse_train_csv;
use hilts_core::dsp::{
    band_power_report, digitize_mean_threshold, dominant_frequency, power_spectrum, reconstruct_analog,
    DEFAULT_RECONSTRUCTION_CUTOFF_HZ,
};
use hilts_core::eeg_dataset::{average_waveform, extract_class, load_dataset, SEIZURE_LABEL};
use serde::Serialize;

use super::db;
use crate::manifest::OutputDir;

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchmarkArgs {
    /// Dataset CSV (178 samples per row plus a class label).
    #[arg(long, env = "HILTS_INPUT", default_value = "data/epileptic_seizure_recognition.csv")]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long, env = "HILTS_OUT", default_value = "out/benchmark")]
    pub out: PathBuf,
    /// Class whose average waveform is the benchmark.
    #[arg(long, env = "HILTS_LABEL", default_value_t = SEIZURE_LABEL, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub label: u8,
    /// Reconstruction low-pass cutoff, Hz.
    #[arg(long, env = "HILTS_CUTOFF", default_value_t = DEFAULT_RECONSTRUCTION_CUTOFF_HZ)]
    pub cutoff: f64,
}

#[derive(Serialize)]
struct Summary {
    label: u8,
    segments: usize,
    analog_dominant_hz: f64,
    reconstructed_dominant_hz: f64,
    analog_bands: BTreeMap<&'static str, f64>,
    reconstructed_bands: BTreeMap<&'static str, f64>,
    rising_edges: usize,
}

pub fn run(args: &BenchmarkArgs) -> anyhow::Result<()> {
    let segments = load_dataset(&args.input).with_context(|| format!("cannot load {}", args.input.display()))?;
    let class = extract_class(&segments, args.label)?;
    let analog = average_waveform(&class)?;
    let digital = digitize_mean_threshold(&analog);
    let recon = reconstruct_analog(&digital, analog.sample_rate(), args.cutoff)?;
    let spec_a = power_spectrum(&analog)?;
    let spec_r = power_spectrum(&recon)?;

    let mut out = OutputDir::create(&args.out)?;
    out.write("analog.csv", &analog.to_csv("amplitude"))?;
    out.write("digitized.csv", &pulse_train_csv(&digital))?;
    out.write("reconstructed.csv", &recon.to_csv("amplitude"))?;
    let mut log_spec = String::from("frequency_hz,analog_db,reconstructed_db\n");
    for ((f, pa), pr) in spec_a.frequencies.iter().zip(&spec_a.power).zip(&spec_r.power) {
        log_spec.push_str(&format!("{f},{},{}\n", db(*pa), db(*pr)));
    }
    out.write("log_spectrum.csv", &log_spec)?;
    out.write_json(
        "summary.json",
        &Summary {
            label: args.label,
            segments: class.len(),
            analog_dominant_hz: dominant_frequency(&spec_a, 0.5)?,
            reconstructed_dominant_hz: dominant_frequency(&spec_r, 0.5)?,
            analog_bands: band_power_report(&analog)?.to_map(),
            reconstructed_bands: band_power_report(&recon)?.to_map(),
            rising_edges: digital.rising_edges(),
        },
    )?;
    out.finish("benchmark", &[&args.input], args)?;
    Ok(())
}
