//! `robomag` command-line front end.
//!
//! Every artefact starts with (CSV) or contains (JSON) a provenance record
//! holding the command, its arguments, the units, the seed and the fully
//! resolved configuration. `--replay <artefact>` re-runs from that record.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use robomag::config::ResolvedConfig;
use serde::{Deserialize, Serialize};

use output::{usage, CmdResult, Provenance, Units};

#[derive(Debug, Parser)]
#[command(
    name = "robomag",
    version,
    about = "Robot-carried magnet field synthesis and NV-centre spin modelling"
)]
struct Cli {
    /// Run configuration TOML; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, written atomically; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Units for numeric arguments, inputs and outputs.
    #[arg(long, global = true, value_enum, default_value_t = Units::Lab)]
    units: Units,
    /// Re-run the command recorded in an artefact's provenance.
    #[arg(long, global = true, conflicts_with_all = ["config", "seed"])]
    replay: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Sphere-segment scan over a one-eighth segment, or evaluation of taught poses.
    Scan(ScanArgs),
    /// Fit calibration offsets to Hall data, or synthesise a calibration arc.
    Calibrate(CalibrateArgs),
    /// Magnet distances realising a linear ramp of field magnitudes.
    Schedule(ScheduleArgs),
    /// Classify scan poses as reachable, IK failure or collision.
    Partition(PartitionArgs),
    /// Replace forbidden poses by displaced and reoriented ones.
    Replace(ReplaceArgs),
    /// Synthesise an ODMR spectrum, or fit resonances to one.
    Odmr(OdmrArgs),
    /// Fit the NV axis orientation to a trajectory, or synthesise a trajectory.
    FitNv(FitNvArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scan(_) => "scan",
            Command::Calibrate(_) => "calibrate",
            Command::Schedule(_) => "schedule",
            Command::Partition(_) => "partition",
            Command::Replace(_) => "replace",
            Command::Odmr(_) => "odmr",
            Command::FitNv(_) => "fit-nv",
        }
    }

    /// Makes input paths absolute so a replay works from any directory.
    fn canonicalise_paths(&mut self) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if let Ok(abs) = std::fs::canonicalize(&*path) {
                    *path = abs;
                }
            }
        };
        match self {
            Command::Scan(a) => fix(&mut a.taught),
            Command::Calibrate(a) => fix(&mut a.input),
            Command::Odmr(a) => fix(&mut a.fit),
            Command::FitNv(a) => fix(&mut a.input),
            Command::Schedule(_) | Command::Partition(_) | Command::Replace(_) => {}
        }
    }
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    /// Grid points per angle on the 0..90° x 0..90° segment.
    #[arg(long, default_value_t = 19)]
    pub grid: usize,
    /// Snap magnet positions to the configured pose resolution.
    #[arg(long)]
    pub snap: bool,
    /// Standard deviation of synthetic Hall noise per component (field units).
    #[arg(long, default_value_t = 0.0)]
    pub hall_noise: f64,
    /// Taught-poses CSV (q1..q6_rad, Bx, By, Bz) to evaluate instead of a grid.
    #[arg(long)]
    pub taught: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct CalibrateArgs {
    /// Calibration CSV (alpha_y, alpha_z, mass_index, Bx, By, Bz) to fit.
    #[arg(long, required_unless_present = "synthesize")]
    pub input: Option<PathBuf>,
    /// Write a synthetic calibration arc instead of fitting.
    #[arg(long, conflicts_with = "input", requires_all = ["delta_y", "delta_z"])]
    pub synthesize: bool,
    /// Injected α_y offset (angle units).
    #[arg(long, allow_negative_numbers = true)]
    pub delta_y: Option<f64>,
    /// Injected α_z offsets, one per stacked mass (angle units).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta_z: Vec<f64>,
    /// Arc points per mass.
    #[arg(long, default_value_t = 16)]
    pub points: usize,
    /// Hall noise standard deviation per component (field units).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ScheduleArgs {
    /// First target magnitude (field units).
    #[arg(long)]
    pub from: f64,
    /// Last target magnitude (field units).
    #[arg(long)]
    pub to: f64,
    /// Number of targets on the ramp.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Field direction α_y (angle units).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha_y: f64,
    /// Field direction α_z (angle units).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha_z: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct PartitionArgs {
    /// Grid points per angle on the one-eighth segment.
    #[arg(long, default_value_t = 10)]
    pub grid: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisArg {
    Y,
    Z,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ReplaceArgs {
    /// Designed field direction α_y of the forbidden pose (angle units).
    #[arg(
        long,
        allow_negative_numbers = true,
        requires = "alpha_z",
        required_unless_present = "grid"
    )]
    pub alpha_y: Option<f64>,
    /// Designed field direction α_z of the forbidden pose (angle units).
    #[arg(long, allow_negative_numbers = true, requires = "alpha_y")]
    pub alpha_z: Option<f64>,
    /// Replace every collision pose of an N x N one-eighth scan instead.
    #[arg(long, conflicts_with_all = ["alpha_y", "alpha_z"])]
    pub grid: Option<usize>,
    /// World axis for the displacement search.
    #[arg(long, value_enum, default_value_t = AxisArg::Z)]
    pub axis: AxisArg,
    /// Displacement search step (length units); 5 mm when omitted.
    #[arg(long)]
    pub step: Option<f64>,
    /// Displacement search steps in each direction.
    #[arg(long, default_value_t = 40)]
    pub max_steps: usize,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct OdmrArgs {
    /// Spectrum CSV (freq, contrast) to fit instead of synthesising.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// World-frame field x component (field units).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub bx: f64,
    /// World-frame field y component (field units).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub by: f64,
    /// World-frame field z component (field units).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub bz: f64,
    /// Sweep start (frequency units); 2.80 GHz when omitted.
    #[arg(long)]
    pub start: Option<f64>,
    /// Sweep stop (frequency units); 2.94 GHz when omitted.
    #[arg(long)]
    pub stop: Option<f64>,
    #[arg(long, default_value_t = 1401)]
    pub points: usize,
    /// Lorentzian FWHM (frequency units); 1 MHz when omitted.
    #[arg(long)]
    pub linewidth: Option<f64>,
    /// Fractional dip depth.
    #[arg(long, default_value_t = 0.02)]
    pub depth: f64,
    /// Standard deviation of additive contrast noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct FitNvArgs {
    /// Trajectory CSV (alpha_yB, alpha_zB, f_minus, f_plus, B_hall).
    #[arg(long, required_unless_present = "synthesize")]
    pub input: Option<PathBuf>,
    /// Write a synthetic trajectory instead of fitting.
    #[arg(long, conflicts_with = "input", requires_all = ["axis_alpha_y", "axis_alpha_z", "field"])]
    pub synthesize: bool,
    /// Generating NV axis α_y (angle units).
    #[arg(long, allow_negative_numbers = true)]
    pub axis_alpha_y: Option<f64>,
    /// Generating NV axis α_z (angle units).
    #[arg(long, allow_negative_numbers = true)]
    pub axis_alpha_z: Option<f64>,
    /// Field magnitude along the trajectory (field units).
    #[arg(long)]
    pub field: Option<f64>,
    /// Trajectory steps.
    #[arg(long, default_value_t = 6)]
    pub rows: usize,
    /// Step in field direction between rows, (Δα_y, Δα_z) in angle units; 10° and 5° when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub step: Vec<f64>,
    /// Standard deviation of resonance-frequency noise (frequency units).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

fn resolve(cli: &Cli) -> CmdResult<(Command, Units, ResolvedConfig)> {
    if let Some(path) = &cli.replay {
        let prov = Provenance::from_artefact(path)?;
        prov.config.validate().map_err(usage)?;
        return Ok((prov.command, prov.units, prov.config));
    }
    let mut command = cli
        .command
        .clone()
        .ok_or_else(|| usage(anyhow::anyhow!("a subcommand is required")))?;
    command.canonicalise_paths();
    let mut config = match &cli.config {
        Some(p) => ResolvedConfig::load(p).map_err(usage)?,
        None => ResolvedConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    Ok((command, cli.units, config))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(&cli).and_then(|(command, units, config)| {
        let prov = Provenance::new(command.clone(), units, config);
        commands::run(&command, &prov, cli.out.as_deref())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code() as u8)
        }
    }
}
