use std::f64::consts::PI;
use std::path::PathBuf;

use clap::Args;
use hilts_core::oscillator::{
    run_entrainment_experiment, ExperimentSettings, LockCriteria, OscillatorParams, DEFAULT_LOCK_TOL,
    DEFAULT_LOCK_WINDOW,
};
use serde::Serialize;

use crate::manifest::OutputDir;

#[derive(Debug, Clone, Args, Serialize)]
pub struct EntrainArgs {
    /// Noise seed.
    #[arg(long, env = "HILTS_SEED", default_value_t = 7)]
    pub seed: u64,
    /// Natural frequency ω₀/2π, Hz.
    #[arg(long, env = "HILTS_NATURAL_HZ", default_value_t = 4.5)]
    pub natural_hz: f64,
    /// Damping ratio ζ.
    #[arg(long, env = "HILTS_ZETA", default_value_t = 0.3)]
    pub zeta: f64,
    /// Forcing amplitude A in [0, 1].
    #[arg(long, env = "HILTS_AMPLITUDE", default_value_t = 1.0)]
    pub amplitude: f64,
    /// Chip pulse frequency, Hz.
    #[arg(long, env = "HILTS_F_CHIP", default_value_t = 6.0)]
    pub f_chip: f64,
    /// Seconds of noise before the trigger.
    #[arg(long, env = "HILTS_PRE", default_value_t = 2.0)]
    pub pre: f64,
    /// Seconds of forcing after the trigger.
    #[arg(long, env = "HILTS_POST", default_value_t = 10.0)]
    pub post: f64,
    /// Output sample rate and integration rate, Hz.
    #[arg(long, env = "HILTS_RATE", default_value_t = 1000.0)]
    pub rate: f64,
    /// Lock tolerance on phase drift, rad/s.
    #[arg(long, env = "HILTS_LOCK_TOL", default_value_t = DEFAULT_LOCK_TOL)]
    pub lock_tol: f64,
    /// Drift-fit window, s.
    #[arg(long, env = "HILTS_LOCK_WINDOW", default_value_t = DEFAULT_LOCK_WINDOW)]
    pub lock_window: f64,
    /// Output directory.
    #[arg(long, env = "HILTS_OUT", default_value = "out/entrain")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Report {
    params: OscillatorParams,
    seed: u64,
    sample_rate: f64,
    criteria: LockCriteria,
    dominant_frequency: f64,
    locked: bool,
    lock_time: Option<f64>,
    /// Null when the response is identically zero.
    residual_drift: Option<f64>,
}

pub fn run(args: &EntrainArgs) -> anyhow::Result<()> {
    let params = OscillatorParams {
        omega0: 2.0 * PI * args.natural_hz,
        zeta: args.zeta,
        amplitude: args.amplitude,
        f_chip: args.f_chip,
    };
    let settings = ExperimentSettings {
        sample_rate: args.rate,
        criteria: LockCriteria::new(args.lock_tol, args.lock_window),
        ..ExperimentSettings::default()
    };
    let exp = run_entrainment_experiment(&params, args.pre, args.post, args.seed, &settings)?;

    let mut out = OutputDir::create(&args.out)?;
    out.write("pre_trigger.csv", &exp.pre_trigger.to_csv("noise"))?;
    let mut response = String::from("time_s,theta,forcing\n");
    for (k, (x, f)) in exp.response.samples().iter().zip(exp.forcing.samples()).enumerate() {
        response.push_str(&format!("{},{x},{f}\n", exp.response.time_of(k)));
    }
    out.write("response.csv", &response)?;
    let mut phase = String::from("time_s,phase_diff_rad\n");
    for (k, d) in exp.lock.phase_diff_series.iter().enumerate() {
        phase.push_str(&format!("{},{d}\n", exp.response.time_of(k)));
    }
    out.write("phase_diff.csv", &phase)?;
    out.write("spectrum.csv", &exp.response_spectrum.to_csv())?;
    out.write_json(
        "report.json",
        &Report {
            params,
            seed: args.seed,
            sample_rate: args.rate,
            criteria: settings.criteria,
            dominant_frequency: exp.dominant_frequency,
            locked: exp.lock.locked,
            lock_time: exp.lock.lock_time,
            residual_drift: Some(exp.lock.residual_drift).filter(|d| d.is_finite()),
        },
    )?;
    out.finish("entrain", &[], args)?;
    Ok(())
}
