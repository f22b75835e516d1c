pub mod analyze;
pub mod benchmark;
pub mod capture;
pub mod emulate;
pub mod entrain;
pub mod serve;

pub use analyze::AnalyzeArgs;
pub use benchmark::BenchmarkArgs;
pub use capture::CaptureArgs;
pub use emulate::EmulateArgs;
pub use entrain::EntrainArgs;
pub use serve::ServeArgs;

/// Longest chip trace a batch command will materialize.
pub const MAX_TRACE_CYCLES: u64 = 20_000_000;

/// Accepts decimal or `0x`-prefixed hexadecimal.
pub(crate) fn parse_u16(s: &str) -> Result<u16, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u16::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("{s:?} is not a 16-bit integer: {e}"))
}

pub(crate) fn check_trace_len(cycles: u64) -> anyhow::Result<()> {
    if cycles > MAX_TRACE_CYCLES {
        anyhow::bail!(
            "{cycles} cycles exceeds the {MAX_TRACE_CYCLES}-cycle trace limit; lower the clock or duration"
        );
    }
    Ok(())
}

/// `10·log10(p)`, with exact zeros mapped to -400 dB.
pub(crate) fn db(p: f64) -> f64 {
    if p > 0.0 {
        10.0 * p.log10()
    } else {
        -400.0
    }
}
