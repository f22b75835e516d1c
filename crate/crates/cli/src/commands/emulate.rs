use std::path::PathBuf;

use clap::Args;
use hilts_core::chip::{
    change_dump_csv, half_period, measure_output_frequency, realized_frequency, run_trace, ChipConfig, Mode,
    DEFAULT_TARGET_HZ, DEFAULT_THRESHOLD, VIRTUAL_CLOCK_HZ,
};
use serde::Serialize;

use super::{check_trace_len, parse_u16};
use crate::manifest::OutputDir;

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmulateArgs {
    /// Chip clock, Hz.
    #[arg(long, env = "HILTS_CLOCK", default_value_t = VIRTUAL_CLOCK_HZ)]
    pub clock: u64,
    /// Entrainment output frequency, Hz.
    #[arg(long, env = "HILTS_TARGET", default_value_t = DEFAULT_TARGET_HZ)]
    pub target: f64,
    /// Clock cycles to run from power-on.
    #[arg(long, env = "HILTS_CYCLES", default_value_t = VIRTUAL_CLOCK_HZ)]
    pub cycles: u64,
    /// Cycle at which the trigger is asserted (none: never).
    #[arg(long, env = "HILTS_TRIGGER_AT")]
    pub trigger_at: Option<u64>,
    /// Cycle at which reset is asserted (none: never).
    #[arg(long, env = "HILTS_RESET_AT")]
    pub reset_at: Option<u64>,
    /// Detection threshold on the chaotic byte.
    #[arg(long, env = "HILTS_THRESHOLD", default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u8,
    /// LFSR seed, decimal or 0x-hex, nonzero.
    #[arg(long, env = "HILTS_LFSR_SEED", default_value = "0xACE1", value_parser = parse_u16)]
    pub lfsr_seed: u16,
    /// Enter ENTRAINED on the chip's own threshold detection.
    #[arg(long, env = "HILTS_AUTO_TRIGGER")]
    pub auto_trigger: bool,
    /// Output directory.
    #[arg(long, env = "HILTS_OUT", default_value = "out/emulate")]
    pub out: PathBuf,
}

impl EmulateArgs {
    pub fn chip_config(&self) -> ChipConfig {
        ChipConfig {
            clock_hz: self.clock,
            target_hz: self.target,
            threshold: self.threshold,
            lfsr_seed: self.lfsr_seed,
            auto_trigger: self.auto_trigger,
        }
    }
}

#[derive(Serialize)]
struct Summary {
    config: ChipConfig,
    cycles: u64,
    half_period: u64,
    realized_frequency: f64,
    rising_edges: usize,
    transitions: usize,
    /// Absent with fewer than two rising edges.
    measured_frequency: Option<f64>,
    final_mode: Mode,
}

pub fn run(args: &EmulateArgs) -> anyhow::Result<()> {
    let config = args.chip_config();
    config.validate()?;
    check_trace_len(args.cycles)?;
    let trace = run_trace(&config, args.cycles, args.trigger_at, args.reset_at)?;

    let mut out = OutputDir::create(&args.out)?;
    out.write("trace.csv", &trace.to_csv())?;
    out.write("changes.csv", &change_dump_csv(&trace.change_dump()))?;
    out.write_json(
        "summary.json",
        &Summary {
            config,
            cycles: args.cycles,
            half_period: half_period(&config),
            realized_frequency: realized_frequency(&config),
            rising_edges: trace.rising_edges().len(),
            transitions: trace.toggles().len(),
            measured_frequency: measure_output_frequency(&trace).ok(),
            final_mode: trace.records.last().expect("non-empty trace").mode,
        },
    )?;
    out.finish("emulate", &[], args)?;
    Ok(())
}
