//! `ppc`: filter false-positive car detections against their LiDAR scans,
//! evaluate the result, sweep the shrink factor, and simulate test frames.

mod dataset;
mod evaluate;
mod failure;
mod filter;
mod sweep;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ppc_core::cad::{canonicalize, downsample, load_cad, CadModel, DEFAULT_CAD_POINTS, DEFAULT_KAPPA};
use ppc_core::eval::Metric;
use ppc_core::kitti::Difficulty;

use crate::failure::{Failure, Outcome};

#[derive(Parser)]
#[command(name = "ppc", version, about = "Reject LiDAR-inconsistent car detections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Remove penetrated detections and write the survivors.
    Filter(FilterCmd),
    /// Score predictions against labels with 40-point AP and HR-Precision.
    Eval(EvalCmd),
    /// Filter at several kappa values and evaluate each.
    Sweep(SweepCmd),
    /// Ray-cast synthetic frames in KITTI layout.
    Synth(SynthCmd),
}

#[derive(Args)]
struct ScanInputs {
    /// Prediction label files, one per frame.
    #[arg(long)]
    pred: PathBuf,
    /// Velodyne `.bin` scans.
    #[arg(long)]
    velo: PathBuf,
    /// Calibration `.txt` files.
    #[arg(long)]
    calib: PathBuf,
    /// CAD point cloud (`x y z` per line). Defaults to the built-in sedan.
    #[arg(long)]
    cad: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct FilterCmd {
    #[command(flatten)]
    inputs: ScanInputs,
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: f64,
    /// Report every penetrated point on stderr.
    #[arg(long)]
    diagnostics: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalCmd {
    #[arg(long)]
    label: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// A second prediction set (usually filtered) to report against `--pred`.
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Defaults to moderate and hard.
    #[arg(long)]
    difficulty: Option<DifficultyArg>,
    /// Defaults to 3d and bev.
    #[arg(long)]
    metric: Option<MetricArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepCmd {
    #[command(flatten)]
    inputs: ScanInputs,
    #[arg(long)]
    label: PathBuf,
    /// Comma-separated shrink factors.
    #[arg(long, value_delimiter = ',', required = true)]
    kappas: Vec<f64>,
    #[arg(long, default_value = "moderate")]
    difficulty: DifficultyArg,
    #[arg(long, default_value = "3d")]
    metric: MetricArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthCmd {
    /// Scene description to cast instead of random scenarios.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, conflicts_with = "scene")]
    frames: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DifficultyArg {
    Moderate,
    Hard,
}

impl From<DifficultyArg> for Difficulty {
    fn from(d: DifficultyArg) -> Self {
        match d {
            DifficultyArg::Moderate => Difficulty::Moderate,
            DifficultyArg::Hard => Difficulty::Hard,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    #[value(name = "3d")]
    ThreeD,
    Bev,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::ThreeD => Metric::ThreeD,
            MetricArg::Bev => Metric::Bev,
        }
    }
}

/// Where the CAD model comes from.
#[derive(Debug, Clone)]
pub enum CadChoice {
    Sedan,
    File(PathBuf),
}

impl CadChoice {
    fn from_arg(path: Option<PathBuf>) -> Self {
        path.map_or(CadChoice::Sedan, CadChoice::File)
    }

    pub fn load(&self) -> Outcome<CadModel> {
        match self {
            CadChoice::Sedan => Ok(CadModel::default_sedan()),
            CadChoice::File(path) => {
                let model = canonicalize(load_cad(path)?)?;
                Ok(downsample(&model, DEFAULT_CAD_POINTS)?)
            }
        }
    }

    pub fn describe(&self, model: &CadModel) -> String {
        let s = model.size();
        let name = match self {
            CadChoice::Sedan => "sedan".to_string(),
            CadChoice::File(p) => p.display().to_string(),
        };
        format!("{name}({} pts, {:.2}x{:.2}x{:.2})", model.len(), s.w, s.l, s.h)
    }
}

pub fn worker_pool(workers: usize) -> Outcome<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Runtime(e.into()))
}

fn check_kappa(kappa: f64) -> Outcome {
    if kappa.is_finite() && kappa > 0.0 {
        Ok(())
    } else {
        Err(Failure::usage(format!("kappa must be positive, got {kappa}")))
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Filter(c) => {
            check_kappa(c.kappa)?;
            filter::run(&filter::FilterArgs {
                pred: c.inputs.pred,
                velo: c.inputs.velo,
                calib: c.inputs.calib,
                cad: CadChoice::from_arg(c.inputs.cad),
                kappa: c.kappa,
                workers: c.inputs.workers,
                diagnostics: c.diagnostics,
                out: c.out,
            })
        }
        Command::Eval(c) => evaluate::run(&evaluate::EvalArgs {
            label: c.label,
            pred: c.pred,
            compare: c.compare,
            difficulties: c
                .difficulty
                .map_or(vec![Difficulty::Moderate, Difficulty::Hard], |d| vec![d.into()]),
            metrics: c
                .metric
                .map_or(vec![Metric::ThreeD, Metric::Bev], |m| vec![m.into()]),
            out: c.out,
        }),
        Command::Sweep(c) => sweep::run(&sweep::SweepArgs {
            pred: c.inputs.pred,
            label: c.label,
            velo: c.inputs.velo,
            calib: c.inputs.calib,
            cad: CadChoice::from_arg(c.inputs.cad),
            kappas: c.kappas,
            difficulty: c.difficulty.into(),
            metric: c.metric.into(),
            workers: c.inputs.workers,
            out: c.out,
        }),
        Command::Synth(c) => synth::run(&synth::SynthArgs {
            scene: c.scene,
            seed: c.seed,
            frames: c.frames,
            out: c.out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version are not errors. Everything else gets 64, since
            // clap's own 2 would read as a frame mismatch.
            return if e.use_stderr() {
                ExitCode::from(64)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ppc: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
