use std::fmt::Write as _;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hilts_core::capture::read_capture;
use hilts_core::chip::{run_trace, ChipConfig};
use hilts_core::dsp::{design_bandpass, filter_zero_phase, power_spectrum, BandpassSpec};
use hilts_core::oscillator::{integrate, noise_signal, OscillatorParams, OscillatorState};

fn dsp(c: &mut Criterion) {
    let x = noise_signal(4096, 178.0, 1).unwrap();
    let stages = design_bandpass(&BandpassSpec::new(0.5, 40.0, 4, 178.0).unwrap()).unwrap();
    c.bench_function("filter_zero_phase 4096", |b| b.iter(|| filter_zero_phase(black_box(&x), &stages).unwrap()));
    c.bench_function("power_spectrum 4096", |b| b.iter(|| power_spectrum(black_box(&x)).unwrap()));
}

fn chip(c: &mut Criterion) {
    let cfg = ChipConfig::default();
    c.bench_function("run_trace 1 s at 9600 Hz", |b| {
        b.iter(|| run_trace(black_box(&cfg), cfg.clock_hz, Some(0), None).unwrap())
    });
}

fn oscillator(c: &mut Criterion) {
    let p = OscillatorParams::default();
    let w = 2.0 * std::f64::consts::PI * p.f_chip;
    c.bench_function("rk4 10 s", |b| {
        b.iter(|| integrate(black_box(&p), OscillatorState::at_rest(), 10.0, p.max_dt(), |t| (w * t).sin()).unwrap())
    });
}

fn capture(c: &mut Criterion) {
    let mut text = String::from("Time [s],Channel 0,Channel 4\n");
    for k in 0..100_000 {
        writeln!(text, "{},{},{}", k as f64 / 10_000.0, u8::from(k % 7 < 3), u8::from(k % 1667 < 833)).unwrap();
    }
    c.bench_function("read_capture dense 100k rows", |b| b.iter(|| read_capture(black_box(text.as_bytes())).unwrap()));
}

criterion_group!(benches, dsp, chip, oscillator, capture);
criterion_main!(benches);
