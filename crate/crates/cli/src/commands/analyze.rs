use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use hilts_core::dsp::{band_power_report, Band};
use hilts_core::eeg_dataset::{
    average_waveform, extract_class, load_dataset, DatasetSummary, DEFAULT_ENTROPY_BINS, SEIZURE_LABEL,
};
use serde::Serialize;

use crate::manifest::OutputDir;

pub const CLASS_LABELS: [u8; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Dataset CSV (178 samples per row plus a class label).
    #[arg(long, env = "HILTS_INPUT", default_value = "data/epileptic_seizure_recognition.csv")]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long, env = "HILTS_OUT", default_value = "out/analyze")]
    pub out: PathBuf,
    /// Histogram bins for per-segment entropy.
    #[arg(long, env = "HILTS_ENTROPY_BINS", default_value_t = DEFAULT_ENTROPY_BINS)]
    pub entropy_bins: usize,
}

#[derive(Serialize)]
struct ClassSummary {
    segments: usize,
    dominant_band: Band,
    /// Delta plus theta power over total 0.5-40 Hz power of the average.
    delta_theta_share: f64,
    bands: BTreeMap<&'static str, f64>,
}

#[derive(Serialize)]
struct Summary {
    dataset: DatasetSummary,
    classes: BTreeMap<u8, ClassSummary>,
    class1_entropy_mean: f64,
    class1_entropy_min: f64,
    class1_entropy_max: f64,
}

pub fn run(args: &AnalyzeArgs) -> anyhow::Result<()> {
    let segments = load_dataset(&args.input).with_context(|| format!("cannot load {}", args.input.display()))?;
    let mut out = OutputDir::create(&args.out)?;

    let mut table = String::from("class");
    for b in Band::ALL {
        table.push(',');
        table.push_str(b.name());
    }
    table.push('\n');

    let mut classes = BTreeMap::new();
    for label in CLASS_LABELS {
        let class = extract_class(&segments, label)?;
        let avg = average_waveform(&class).with_context(|| format!("class {label}"))?;
        let report = band_power_report(&avg)?;
        table.push_str(&label.to_string());
        for b in Band::ALL {
            table.push_str(&format!(",{}", report.get(b)));
        }
        table.push('\n');
        out.write(&format!("avg_waveform_class{label}.csv"), &avg.to_csv("amplitude"))?;
        classes.insert(
            label,
            ClassSummary {
                segments: class.len(),
                dominant_band: report.dominant_band(),
                delta_theta_share: report.share(&[Band::Delta, Band::Theta]),
                bands: report.to_map(),
            },
        );
    }
    out.write("band_power_by_class.csv", &table)?;

    let seizure = extract_class(&segments, SEIZURE_LABEL)?;
    let mut entropy = String::from("index,subject_chunk_id,entropy\n");
    let mut values = Vec::with_capacity(seizure.len());
    for (i, s) in seizure.iter().enumerate() {
        let h = s.entropy(args.entropy_bins)?;
        entropy.push_str(&format!("{i},{},{h}\n", s.subject_chunk_id()));
        values.push(h);
    }
    out.write("entropy_class1.csv", &entropy)?;

    let summary = Summary {
        dataset: DatasetSummary::of(&segments),
        classes,
        class1_entropy_mean: values.iter().sum::<f64>() / values.len() as f64,
        class1_entropy_min: values.iter().copied().fold(f64::INFINITY, f64::min),
        class1_entropy_max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    out.write_json("summary.json", &summary)?;
    out.finish("analyze", &[&args.input], args)?;
    Ok(())
}
