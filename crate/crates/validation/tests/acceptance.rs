//! One line per headline criterion: `PASS`/`FAIL`, the measured values and
//! the runtime against its limit. Runs without the libtest harness so every
//! line is printed, and exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use hilts_core::capture::{capture_from_changes, pulse_stats, read_capture};
use hilts_core::chip::{
    chip_to_pulse_train, half_period, measure_output_frequency, realized_frequency, run_trace, ChipConfig,
    ChipState, Mode, Signal, HARDWARE_CLOCK_HZ,
};
use hilts_core::dsp::{
    band_power, band_power_report, design_bandpass, digitize_mean_threshold, dominant_frequency, power_spectrum,
    reconstruct_analog, Band, BandPowerReport, BandpassSpec,
};
use hilts_core::eeg_dataset::{average_waveform, extract_class, load_dataset, shannon_entropy, EegSegment};
use hilts_core::oscillator::{
    detect_phase_lock, integrate, noise_signal, run_entrainment_experiment, ExperimentSettings, LockCriteria,
    OscillatorParams, OscillatorState,
};
use hilts_core::Waveform;

type Outcome = Result<String, String>;

fn criterion(name: &str, limit_s: Option<f64>, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed().as_secs_f64();
    let in_time = limit_s.is_none_or(|l| elapsed < l);
    let limit = limit_s.map_or(String::new(), |l| format!(", limit {l} s"));
    let (pass, detail) = match &outcome {
        Ok(d) if in_time => (true, d.clone()),
        Ok(d) => (false, format!("{d}; too slow")),
        Err(d) => (false, d.clone()),
    };
    println!(
        "{} {name}: {detail} (runtime {elapsed:.3} s{limit})",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dataset_path() -> PathBuf {
    std::env::var_os("HILTS_DATASET").map(PathBuf::from).unwrap_or_else(|| {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/epileptic_seizure_recognition.csv")
    })
}

fn load_public_dataset() -> Result<Vec<EegSegment>, String> {
    let path = dataset_path();
    if !path.is_file() {
        return Err(format!(
            "public dataset not found at {} (set HILTS_DATASET to the published CSV)",
            path.display()
        ));
    }
    load_dataset(&path).map_err(|e| e.to_string())
}

fn class_report(segments: &[EegSegment], label: u8) -> Result<BandPowerReport, String> {
    let class = extract_class(segments, label).map_err(|e| e.to_string())?;
    let avg = average_waveform(&class).map_err(|e| e.to_string())?;
    band_power_report(&avg).map_err(|e| e.to_string())
}

fn seizure_band_dominance() -> bool {
    criterion("seizure-band dominance", Some(10.0), || {
        let segments = load_public_dataset()?;
        let r = class_report(&segments, 1)?;
        let theta = r.get(Band::Theta);
        let above = [Band::Alpha, Band::Beta, Band::Gamma].map(|b| r.get(b));
        check(
            above.iter().all(|&p| theta > p),
            format!("theta {theta:.4e} vs alpha/beta/gamma {:.4e}/{:.4e}/{:.4e}", above[0], above[1], above[2]),
        )
    })
}

fn class_contrast() -> bool {
    criterion("class contrast", Some(30.0), || {
        let segments = load_public_dataset()?;
        let shares = (1..=5u8)
            .map(|l| class_report(&segments, l).map(|r| r.share(&[Band::Delta, Band::Theta])))
            .collect::<Result<Vec<_>, _>>()?;
        check(
            shares[1..].iter().all(|&s| shares[0] > s),
            format!("delta+theta share by class 1..5 = {shares:.4?}"),
        )
    })
}

fn entrained_spectrum_peak() -> bool {
    criterion("entrained-spectrum peak", Some(5.0), || {
        let cfg = ChipConfig::default();
        let trace = run_trace(&cfg, 4 * cfg.clock_hz, Some(0), None).map_err(|e| e.to_string())?;
        let p = chip_to_pulse_train(&trace, 178.0).map_err(|e| e.to_string())?;
        let recon = reconstruct_analog(&p, 178.0, 10.0).map_err(|e| e.to_string())?;
        let spec = power_spectrum(&recon).map_err(|e| e.to_string())?;
        let dom = dominant_frequency(&spec, 0.5).map_err(|e| e.to_string())?;
        let share = band_power(&spec, 5.5, 6.5).unwrap() / band_power(&spec, 0.5, 40.0).unwrap();
        check(
            (dom - 6.0).abs() <= 0.25 && share > 0.8,
            format!("dominant {dom:.4} Hz (6.00 ± 0.25), 5.5-6.5 Hz share {share:.4} (> 0.8)"),
        )
    })
}

fn chip_timing_exactness() -> bool {
    criterion("chip timing exactness", Some(2.0), || {
        let cfg = ChipConfig::default();
        let trace = run_trace(&cfg, cfg.clock_hz, Some(0), None).map_err(|e| e.to_string())?;
        let rising = trace.rising_edges();
        let toggles = trace.toggles();
        let gaps: Vec<u64> = toggles.windows(2).map(|w| w[1] - w[0]).collect();
        let jitter_free = gaps.iter().all(|&g| g == half_period(&cfg));

        // 100 MHz: divider and frequency by arithmetic, one half period at a time.
        let hw = ChipConfig {
            clock_hz: HARDWARE_CLOCK_HZ,
            ..ChipConfig::default()
        };
        let divider = half_period(&hw);
        let mut st = ChipState {
            mode: Mode::Entrained,
            normal_signal: true,
            ..ChipState::power_on(&hw)
        };
        let mut toggled_on_time = true;
        for _ in 0..12 {
            let before = st.normal_signal;
            st.advance_idle(&hw, divider - 1);
            toggled_on_time &= st.normal_signal == before;
            st.advance_idle(&hw, 1);
            toggled_on_time &= st.normal_signal != before;
        }
        let measured = HARDWARE_CLOCK_HZ as f64 * 6.0 / st.cycle as f64;
        let err = (measured - 6.0).abs();
        check(
            rising.len() == 6
                && toggles.len() == 12
                && jitter_free
                && divider == 8_333_333
                && toggled_on_time
                && err < 1e-4
                && (realized_frequency(&hw) - measured).abs() < 1e-12,
            format!(
                "9600 Hz/1 s: rising={} transitions={}, \
                 period jitter {}; 100 MHz: divider={divider}, measured {measured:.9} Hz, error {err:.3e} Hz",
                rising.len(),
                toggles.len(),
                if jitter_free { "0" } else { "nonzero" },
            ),
        )
    })
}

fn oscillator_oracle() -> bool {
    criterion("oscillator oracle", Some(10.0), || {
        let base = OscillatorParams::default();
        let w0 = base.omega0;
        let mut worst = 0.0f64;
        for ratio in [0.5, 1.0, 1.5, 2.0] {
            let w = ratio * w0;
            let params = OscillatorParams {
                f_chip: w / (2.0 * PI),
                ..base
            };
            let decay = 1.0 / (base.zeta * w0);
            let duration = 10.0 * decay + 5.0 * 2.0 * PI / w;
            let traj = integrate(&params, OscillatorState::at_rest(), duration, params.max_dt() / 4.0, |t| {
                (w * t).sin()
            })
            .map_err(|e| e.to_string())?;
            let amp = traj
                .iter()
                .filter(|s| s.t >= 10.0 * decay)
                .fold(0.0f64, |m, s| m.max(s.theta.abs()));
            let expected = 1.0 / ((w0 * w0 - w * w).powi(2) + (2.0 * base.zeta * w0 * w).powi(2)).sqrt();
            worst = worst.max((amp - expected).abs() / expected);
        }

        let w = 2.0 * PI * base.f_chip;
        let state0 = OscillatorState {
            theta: 0.3,
            theta_dot: -1.0,
            t: 0.0,
        };
        let end = |dt: f64| integrate(&base, state0, 1.0, dt, |t| (w * t).sin()).map(|tr| tr.last().unwrap().theta);
        let h = base.max_dt();
        let (y1, y2, y4) = (end(h).unwrap(), end(h / 2.0).unwrap(), end(h / 4.0).unwrap());
        let order = ((y1 - y2).abs() / (y2 - y4).abs()).log2();
        check(
            worst < 0.01 && order >= 3.5,
            format!("worst amplitude error {:.3}% (< 1%), observed order {order:.3} (>= 3.5)", worst * 100.0),
        )
    })
}

fn phase_lock_dichotomy() -> bool {
    criterion("phase-lock dichotomy", Some(2.0), || {
        let fs = 1000.0;
        let tone = |f: f64, ph: f64| Waveform::from_fn(4000, fs, |t| (2.0 * PI * f * t + ph).sin()).unwrap();
        let crit = LockCriteria::default();
        let apart = detect_phase_lock(&tone(11.0, 0.0), &tone(13.0, 0.0), &crit).map_err(|e| e.to_string())?;
        let offset = detect_phase_lock(&tone(11.0, 0.0), &tone(11.0, 1.1), &crit).map_err(|e| e.to_string())?;
        let expected = 4.0 * PI;
        let rel = (apart.residual_drift.abs() - expected).abs() / expected;
        check(
            !apart.locked && rel <= 0.05 && offset.locked && offset.residual_drift.abs() < 0.01,
            format!(
                "11 vs 13 Hz: locked={} drift {:.4} rad/s (4π ± 5%); offset 11 Hz: locked={} drift {:.2e} rad/s (< 0.01)",
                apart.locked, apart.residual_drift, offset.locked, offset.residual_drift
            ),
        )
    })
}

fn entrainment_experiment() -> bool {
    criterion("entrainment experiment", Some(5.0), || {
        let exp = run_entrainment_experiment(&OscillatorParams::default(), 2.0, 10.0, 7, &ExperimentSettings::default())
            .map_err(|e| e.to_string())?;
        let dom = exp.dominant_frequency;
        let lock = exp.lock.lock_time;
        check(
            (dom - 6.0).abs() <= 0.25 && exp.lock.locked && lock.is_some_and(|t| t <= 5.0),
            format!("dominant {dom:.4} Hz (6.0 ± 0.25), locked={}, lock time {} s (<= 5)", exp.lock.locked, lock.map_or("none".into(), |t| format!("{t:.3}"))),
        )
    })
}

fn capture_round_trip() -> bool {
    criterion("capture round trip", Some(2.0), || {
        let cfg = ChipConfig::default();
        let n = 3 * cfg.clock_hz;
        let trace = run_trace(&cfg, n, Some(17), None).map_err(|e| e.to_string())?;
        let cap = capture_from_changes(&trace.change_dump(), Signal::NormalSignal, cfg.clock_hz, n, 4)
            .map_err(|e| e.to_string())?;
        let parsed = read_capture(cap.to_transitions_csv().as_bytes()).map_err(|e| e.to_string())?;
        let stats = pulse_stats(&parsed, 4).map_err(|e| e.to_string())?;
        let measured = measure_output_frequency(&trace).map_err(|e| e.to_string())?;
        let rel = (stats.mean_frequency - measured).abs() / measured;

        // The same two channels exported densely and as transitions only.
        let rate = 1000.0;
        let a: Vec<u8> = (0..500).map(|k| u8::from(k % 37 < 11)).collect();
        let b: Vec<u8> = (0..500).map(|k| u8::from((k / 7) % 5 == 2)).collect();
        let mut dense = String::from("Time [s],Channel 0,Channel 4\n");
        let mut sparse = dense.clone();
        for k in 0..a.len() {
            let row = format!("{},{},{}\n", k as f64 / rate, a[k], b[k]);
            dense.push_str(&row);
            if k == 0 || k == a.len() - 1 || a[k] != a[k - 1] || b[k] != b[k - 1] {
                sparse.push_str(&row);
            }
        }
        let d = read_capture(dense.as_bytes()).map_err(|e| e.to_string())?;
        let s = read_capture(sparse.as_bytes()).map_err(|e| e.to_string())?;
        let same = d.channels == s.channels;
        let edges: usize = d.channels.iter().map(|c| c.edges.len()).sum();
        check(
            rel <= 1e-9 && same,
            format!(
                "capture {:.12} Hz vs trace {measured:.12} Hz (rel {rel:.1e} <= 1e-9); dense vs transitions: {} ({edges} edges)",
                stats.mean_frequency,
                if same { "identical edge lists" } else { "edge lists differ" }
            ),
        )
    })
}

fn write_surrogate_dataset(path: &Path) {
    let mut text = String::new();
    for label in 1..=5u8 {
        for row in 0..20u64 {
            let noise = noise_signal(178, 178.0, 1000 * label as u64 + row).unwrap();
            write!(text, "X{row}.V{label}").unwrap();
            for (k, v) in noise.samples().iter().enumerate() {
                let t = k as f64 / 178.0;
                write!(text, ",{}", (60.0 * (2.0 * PI * (label + 2) as f64 * t).sin() + 30.0 * v).round()).unwrap();
            }
            writeln!(text, ",{label}").unwrap();
        }
    }
    std::fs::write(path, text).unwrap();
}

fn run_twice_identical(dir: &Path, sub: &str, extra: &[&str]) -> Result<usize, String> {
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.join(format!("{sub}-{run}"));
        let mut args = vec!["hilts", sub];
        args.extend(extra);
        args.extend(["--out", out.to_str().unwrap()]);
        let cli = hilts_cli::Cli::try_parse_from(args).map_err(|e| e.to_string())?;
        hilts_cli::run(cli).map_err(|e| format!("{sub} failed: {e:#}"))?;
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap() != hilts_cli::MANIFEST_FILE)
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        files.sort();
        outputs.push(files);
    }
    if outputs[0] != outputs[1] {
        return Err(format!("{sub} outputs differ between reruns"));
    }
    Ok(outputs[0].len())
}

fn determinism_suite() -> bool {
    criterion("determinism suite", None, || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let public = dataset_path();
        let (data, which) = if public.is_file() {
            (public, "public dataset")
        } else {
            let p = dir.path().join("surrogate.csv");
            write_surrogate_dataset(&p);
            (p, "synthetic surrogate dataset")
        };
        let data = data.to_str().unwrap().to_string();
        let em = run_twice_identical(dir.path(), "emulate", &["--trigger-at", "100", "--cycles", "28800"])?;
        let en = run_twice_identical(dir.path(), "entrain", &["--seed", "7"])?;
        let an = run_twice_identical(dir.path(), "analyze", &["--input", &data])?;
        Ok(format!(
            "emulate ({em} files), entrain seed 7 ({en} files), analyze on {which} ({an} files): byte-identical reruns"
        ))
    })
}

fn dsp_property_suite() -> bool {
    criterion("DSP property suite", None, || {
        let mut notes = Vec::new();
        let mut ok = true;

        let mut worst_edge = 0.0f64;
        for &(lo, hi, order, fs) in &[(0.5, 40.0, 4, 178.0), (4.0, 8.0, 4, 178.0), (1.0, 30.0, 2, 250.0)] {
            let st = design_bandpass(&BandpassSpec::new(lo, hi, order, fs).unwrap()).unwrap();
            for f in [lo, hi] {
                worst_edge = worst_edge.max((20.0 * st.magnitude(f).log10() + 3.0103).abs());
            }
        }
        ok &= worst_edge <= 0.1;
        notes.push(format!("band edges within {worst_edge:.2e} dB of -3.01 dB"));

        let mut worst_parseval = 0.0f64;
        let mut worst_partition = 0.0f64;
        let mut affine_ok = true;
        for seed in 0..200u64 {
            let n = 32 + (seed as usize * 37) % 600;
            let x = noise_signal(n, 178.0, seed).unwrap();
            let s = power_spectrum(&x).unwrap();
            let energy: f64 = x.samples().iter().map(|v| v * v).sum();
            let mut spectral = s.power[0];
            for k in 1..s.len() {
                spectral += if n.is_multiple_of(2) && k == n / 2 { s.power[k] } else { 2.0 * s.power[k] };
            }
            worst_parseval = worst_parseval.max((energy - spectral / n as f64).abs() / energy);

            let r = BandPowerReport::from_spectrum(&s);
            let full = band_power(&s, 0.5, 40.0).unwrap();
            worst_partition = worst_partition.max((r.total() - full).abs() / full.max(1e-300));

            // Integer-valued samples under a dyadic scale and integer shift
            // map exactly, so the bits must agree exactly.
            let xi: Vec<f64> = x.samples().iter().map(|v| (v * 1000.0).round()).collect();
            let (a, b) = (2f64.powi((seed % 9) as i32 - 4), (seed as f64) - 100.0);
            let p = digitize_mean_threshold(&Waveform::new(xi.clone(), 178.0).unwrap());
            let q = digitize_mean_threshold(&Waveform::new(xi.iter().map(|v| a * v + b).collect(), 178.0).unwrap());
            affine_ok &= p.bits() == q.bits();
        }
        ok &= worst_parseval <= 1e-6 && worst_partition <= 1e-12 && affine_ok;
        notes.push(format!("Parseval rel error {worst_parseval:.1e} (<= 1e-6)"));
        notes.push(format!("partition rel error {worst_partition:.1e}"));
        notes.push(format!("digitizer affine invariance {}", if affine_ok { "holds" } else { "broken" }));

        let bins = 32usize;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for seed in 0..1000u64 {
            let seg = noise_signal(178, 178.0, 50_000 + seed).unwrap();
            let h = shannon_entropy(seg.samples(), bins).unwrap();
            lo = lo.min(h);
            hi = hi.max(h);
        }
        let bound = (bins as f64).ln();
        ok &= lo >= 0.0 && hi <= bound;
        notes.push(format!("entropy of 1000 segments in [{lo:.3}, {hi:.3}] within [0, ln {bins} = {bound:.3}]"));
        check(ok, notes.join("; "))
    })
}

fn main() -> std::process::ExitCode {
    let results = [
        seizure_band_dominance(),
        class_contrast(),
        entrained_spectrum_peak(),
        chip_timing_exactness(),
        oscillator_oracle(),
        phase_lock_dichotomy(),
        entrainment_experiment(),
        capture_round_trip(),
        determinism_suite(),
        dsp_property_suite(),
    ];
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        std::process::ExitCode::SUCCESS
    } else {
        std::process::ExitCode::FAILURE
    }
}
