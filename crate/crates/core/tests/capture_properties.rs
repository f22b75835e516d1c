use hilts_core::capture::{
    capture_from_changes, channel_to_pulse_train, pulse_stats, read_capture, DigitalCapture,
};
use hilts_core::chip::{measure_output_frequency, run_trace, ChipConfig, Signal};
use proptest::prelude::*;

// Rising edge every `period` s with the given high time; one period stretched by `extra`.
fn transitions_csv(period: f64, high: f64, n_periods: usize, stretch_at: usize, extra: f64) -> String {
    let mut s = String::from("Time [s],Channel 4\n0,0\n");
    let mut t = 0.01;
    for k in 0..n_periods {
        s.push_str(&format!("{t},1\n{},0\n", t + high));
        t += period + if k == stretch_at { extra } else { 0.0 };
    }
    s.push_str(&format!("{t},1\n{},0\n", t + high));
    s
}

#[test]
fn single_stretched_period_gives_analytic_jitter() {
    let (period, n, extra) = (1.0 / 6.0, 12, 1e-3);
    let cap = read_capture(transitions_csv(period, period / 2.0, n, 5, extra).as_bytes()).unwrap();
    let st = pulse_stats(&cap, 4).unwrap();
    // One deviation of extra·(1 − 1/n) and n − 1 of −extra/n around the mean period.
    let expected = extra * ((n - 1) as f64).sqrt() / n as f64;
    assert!((st.period_jitter_rms - expected).abs() < 1e-12, "{} vs {expected}", st.period_jitter_rms);
    let mean_period = period + extra / n as f64;
    assert!((st.mean_frequency - 1.0 / mean_period).abs() < 1e-9);
}

#[test]
fn chip_capture_round_trip_matches_measurement() {
    for (clock, target) in [(9600, 6.0), (10_000, 7.0), (48_000, 13.0)] {
        let cfg = ChipConfig {
            clock_hz: clock,
            target_hz: target,
            ..ChipConfig::default()
        };
        let n = 3 * clock;
        let trace = run_trace(&cfg, n, Some(17), None).unwrap();
        let dump = trace.change_dump();
        let cap = capture_from_changes(&dump, Signal::NormalSignal, clock, n, 4).unwrap();
        let parsed = read_capture(cap.to_transitions_csv().as_bytes()).unwrap();
        let stats = pulse_stats(&parsed, 4).unwrap();
        let measured = measure_output_frequency(&trace).unwrap();
        assert!(
            (stats.mean_frequency - measured).abs() <= 1e-9 * measured,
            "{} vs {measured}",
            stats.mean_frequency
        );
    }
}

fn levels() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::bool::weighted(0.1).prop_map(u8::from), 2..400).prop_map(|flips| {
        let mut level = 0u8;
        flips
            .into_iter()
            .map(|f| {
                level ^= f;
                level
            })
            .collect()
    })
}

fn dense_csv(ch_a: &[u8], ch_b: &[u8], rate: f64) -> String {
    let mut s = String::from("Time [s],Channel 0,Channel 4\n");
    for (k, (a, b)) in ch_a.iter().zip(ch_b).enumerate() {
        s.push_str(&format!("{},{a},{b}\n", k as f64 / rate));
    }
    s
}

fn sparse_csv(ch_a: &[u8], ch_b: &[u8], rate: f64) -> String {
    let mut s = String::from("Time [s],Channel 0,Channel 4\n");
    let n = ch_a.len();
    for k in 0..n {
        let changed = k == 0 || ch_a[k] != ch_a[k - 1] || ch_b[k] != ch_b[k - 1] || k == n - 1;
        if changed {
            s.push_str(&format!("{},{},{}\n", k as f64 / rate, ch_a[k], ch_b[k]));
        }
    }
    s
}

type EdgeList = Vec<(u32, u8, Vec<(f64, u8)>)>;

fn edge_lists(c: &DigitalCapture) -> EdgeList {
    c.channels
        .iter()
        .map(|ch| (ch.number, ch.initial_level, ch.edges.iter().map(|e| (e.time, e.level)).collect()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dense_and_transition_exports_agree(a in levels(), b_seed in levels(), rate in prop::sample::select(vec![178.0, 1000.0, 9600.0, 24_000_000.0])) {
        let n = a.len().min(b_seed.len());
        let (a, b) = (&a[..n], &b_seed[..n]);
        let dense = read_capture(dense_csv(a, b, rate).as_bytes()).unwrap();
        let sparse = read_capture(sparse_csv(a, b, rate).as_bytes()).unwrap();
        prop_assert_eq!(edge_lists(&dense), edge_lists(&sparse));
        prop_assert_eq!(dense.start_time, sparse.start_time);
        prop_assert_eq!(dense.end_time, sparse.end_time);
    }

    #[test]
    fn resampling_at_native_rate_reproduces_column(a in levels(), rate in prop::sample::select(vec![178.0, 1000.0, 12_000.0])) {
        let cap = read_capture(dense_csv(&a, &a, rate).as_bytes()).unwrap();
        let p = channel_to_pulse_train(&cap, 4, rate).unwrap();
        prop_assert_eq!(p.bits(), a.as_slice());
    }

    #[test]
    fn duty_cycle_is_a_fraction(a in levels()) {
        let cap = read_capture(dense_csv(&a, &a, 1000.0).as_bytes()).unwrap();
        if let Ok(st) = pulse_stats(&cap, 4) {
            prop_assert!((0.0..=1.0).contains(&st.duty_cycle));
            prop_assert!(st.mean_frequency > 0.0);
            prop_assert!(st.period_jitter_rms >= 0.0);
        }
    }
}
