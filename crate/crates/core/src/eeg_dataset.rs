//! Chunked EEG dataset: loading, class extraction, averaging and entropy.
//!
//! Each row of the dataset holds one 1-second window of 178 samples
//! followed by an integer class label in `1..=5` (class 1 = seizure).
//! Files may carry a header row and a leading text row-identifier column;
//! both are detected and skipped.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{invalid, parse_err, Error, Result};
use crate::numeric::compensated_sum;
use crate::signal::Waveform;

/// Samples per dataset row.
pub const SEGMENT_LEN: usize = 178;

/// Sample rate assigned to every segment: 178 samples span one second.
pub const SEGMENT_RATE_HZ: f64 = 178.0;

/// Label of the seizure class.
pub const SEIZURE_LABEL: u8 = 1;

/// Default histogram resolution for [`shannon_entropy`].
pub const DEFAULT_ENTROPY_BINS: usize = 32;

/// One labeled 178-sample EEG window in microvolts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EegSegment {
    samples: Vec<f64>,
    label: u8,
    subject_chunk_id: String,
}

impl EegSegment {
    pub fn new(samples: Vec<f64>, label: u8, subject_chunk_id: impl Into<String>) -> Result<Self> {
        if samples.len() != SEGMENT_LEN {
            return Err(invalid(format!(
                "segment must have {SEGMENT_LEN} samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(invalid("segment contains non-finite samples"));
        }
        check_label(label)?;
        Ok(Self {
            samples,
            label,
            subject_chunk_id: subject_chunk_id.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn subject_chunk_id(&self) -> &str {
        &self.subject_chunk_id
    }

    pub fn to_waveform(&self) -> Waveform {
        Waveform::new(self.samples.clone(), SEGMENT_RATE_HZ).expect("segment samples are finite")
    }
}

fn check_label(label: u8) -> Result<()> {
    if (1..=5).contains(&label) {
        Ok(())
    } else {
        Err(invalid(format!("label {label} outside 1..=5")))
    }
}

/// Per-label row counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DatasetSummary {
    pub counts: BTreeMap<u8, usize>,
    pub total_rows: usize,
}

impl DatasetSummary {
    pub fn of(segments: &[EegSegment]) -> Self {
        let mut counts = BTreeMap::new();
        for s in segments {
            *counts.entry(s.label).or_insert(0) += 1;
        }
        Self {
            counts,
            total_rows: segments.len(),
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<EegSegment>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_dataset(file)
}

/// Parses dataset CSV from any reader. See the module docs for the layout.
pub fn read_dataset<R: Read>(reader: R) -> Result<Vec<EegSegment>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut segments = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut line = 0usize;
    let mut first = true;
    while rdr.read_record(&mut record)? {
        line = record.position().map_or(line + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if first {
            first = false;
            if is_header(&record) {
                continue;
            }
        }
        segments.push(parse_row(&record, line, segments.len())?);
    }
    Ok(segments)
}

// A header row has a non-numeric entry among the sample columns.
fn is_header(record: &csv::StringRecord) -> bool {
    record
        .iter()
        .skip(1)
        .take(SEGMENT_LEN)
        .any(|f| f.parse::<f64>().is_err())
}

fn parse_row(record: &csv::StringRecord, line: usize, ordinal: usize) -> Result<EegSegment> {
    let fields: Vec<&str> = record.iter().collect();
    let (id, values) = match fields.len() {
        n if n == SEGMENT_LEN + 1 => (format!("row{ordinal}"), &fields[..]),
        n if n == SEGMENT_LEN + 2 && fields[0].parse::<f64>().is_err() => {
            (fields[0].to_string(), &fields[1..])
        }
        n => {
            return Err(parse_err(
                line,
                format!(
                    "expected {} fields ({SEGMENT_LEN} samples + label), found {n}",
                    SEGMENT_LEN + 1
                ),
            ))
        }
    };

    let mut samples = Vec::with_capacity(SEGMENT_LEN);
    for (col, field) in values[..SEGMENT_LEN].iter().enumerate() {
        let v: f64 = field
            .parse()
            .map_err(|_| parse_err(line, format!("sample X{} is not numeric: {field:?}", col + 1)))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("sample X{} is not finite", col + 1)));
        }
        samples.push(v);
    }

    let raw_label = values[SEGMENT_LEN];
    let label: f64 = raw_label
        .parse()
        .map_err(|_| parse_err(line, format!("label is not numeric: {raw_label:?}")))?;
    if label.fract() != 0.0 || !(1.0..=5.0).contains(&label) {
        return Err(invalid(format!("line {line}: label {raw_label} outside 1..=5")));
    }

    Ok(EegSegment {
        samples,
        label: label as u8,
        subject_chunk_id: id,
    })
}

/// Order-preserving filter on `label`.
pub fn extract_class(segments: &[EegSegment], label: u8) -> Result<Vec<EegSegment>> {
    check_label(label)?;
    Ok(segments.iter().filter(|s| s.label == label).cloned().collect())
}

/// Pointwise mean of equally long segments, at [`SEGMENT_RATE_HZ`].
pub fn average_waveform(segments: &[EegSegment]) -> Result<Waveform> {
    let first = segments
        .first()
        .ok_or_else(|| invalid("cannot average an empty set of segments"))?;
    let len = first.samples.len();
    if let Some(bad) = segments.iter().find(|s| s.samples.len() != len) {
        return Err(invalid(format!(
            "segment {} has {} samples, expected {len}",
            bad.subject_chunk_id,
            bad.samples.len()
        )));
    }
    let m = segments.len() as f64;
    let mean = (0..len)
        .map(|t| compensated_sum(segments.iter().map(|s| s.samples[t])) / m)
        .collect();
    Waveform::new(mean, SEGMENT_RATE_HZ)
}

/// Shannon entropy (nats) of the amplitude histogram of `samples`.
///
/// Uses `n_bins` equal-width bins spanning `[min, max]` of the samples
/// themselves; the maximum lands in the last bin. A constant input occupies
/// a single bin and yields 0.
pub fn shannon_entropy(samples: &[f64], n_bins: usize) -> Result<f64> {
    if n_bins < 2 {
        return Err(invalid(format!("entropy needs at least 2 bins, got {n_bins}")));
    }
    if samples.is_empty() {
        return Err(invalid("entropy of an empty sample set"));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if range <= 0.0 {
        return Ok(0.0);
    }

    let mut counts = vec![0usize; n_bins];
    for &v in samples {
        let idx = (((v - lo) / range) * n_bins as f64).floor() as usize;
        counts[idx.min(n_bins - 1)] += 1;
    }

    let n = samples.len() as f64;
    let h = -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

impl EegSegment {
    pub fn entropy(&self, n_bins: usize) -> Result<f64> {
        shannon_entropy(&self.samples, n_bins)
    }
}
