mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use air_core::upr::EyePose;
use air_core::{Error, Exec, Result};
use clap::{Args, Parser, Subcommand};

use commands::Context;
use config::{parse_eye, Overrides, RunConfig};

/// Simulator for a steerable pan/tilt projector-camera rig.
#[derive(Parser)]
#[command(name = "air-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a calibration session and write its observations.
    SimulateCalib(Common),
    /// Calibrate the rig from a session file.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Session file; overrides "session" in the config.
        #[arg(long)]
        session: Option<PathBuf>,
    },
    /// Render pass 1 and the warped projector framebuffer.
    Correct(Common),
    /// Run the benchmark suite and write the report.
    Evaluate(Common),
    /// Simulate what the user sees with the corrected projection.
    RenderUserView(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Eye position in the rear-camera frame, meters.
    #[arg(long, value_parser = parse_eye, allow_hyphen_values = true)]
    eye: Option<EyePose>,
    /// Pan angle in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pan: Option<f64>,
    /// Tilt angle in degrees.
    #[arg(long, allow_hyphen_values = true)]
    tilt: Option<f64>,
    #[arg(long)]
    no_correction: bool,
}

/// Honors `AIR_SIM_THREADS`; one thread runs everything sequentially.
fn configure_threads() -> Result<Exec> {
    let Ok(value) = std::env::var("AIR_SIM_THREADS") else {
        return Ok(Exec::default());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("AIR_SIM_THREADS must be a positive integer, got {value:?}")))?;
    if n == 1 {
        return Ok(Exec::Sequential);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {n} worker threads: {e}")))?;
    Ok(Exec::Parallel)
}

fn context(common: &Common, exec: Exec) -> Result<Context> {
    let overrides = Overrides {
        seed: common.seed,
        eye: common.eye,
        pan_deg: common.pan,
        tilt_deg: common.tilt,
        no_correction: common.no_correction,
    };
    let config = RunConfig::resolve(common.config.as_deref(), &overrides)?;
    Ok(Context {
        config,
        out: common.out.clone(),
        exec,
    })
}

fn run(cli: Cli) -> Result<()> {
    let exec = configure_threads()?;
    match &cli.command {
        Command::SimulateCalib(c) => commands::simulate_calib(&context(c, exec)?),
        Command::Calibrate { common, session } => commands::calibrate(&context(common, exec)?, session.as_deref()),
        Command::Correct(c) => commands::correct(&context(c, exec)?),
        Command::Evaluate(c) => commands::evaluate(&context(c, exec)?),
        Command::RenderUserView(c) => commands::render_user_view(&context(c, exec)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // One line, code first, so scripts can match on it.
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.code());
            ExitCode::FAILURE
        }
    }
}
