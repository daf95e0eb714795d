//! `uavtrace`: detect a UAV in a LiDAR scan sequence, evaluate the
//! trajectory, generate synthetic scenes and plot results.

mod config;
mod detect;
mod error;
mod eval;
mod plot;
mod synth;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uavtrace_core::scoring::PairSchedule;
use uavtrace_core::trajectory::FrameReducer;
use uavtrace_core::ScanFormat;

use config::{PipelineConfig, SweepAxis};
use error::{CliError, Result};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  config error (bad TOML, unknown key, invalid parameter, bad --sweep)
  3  input or output file error (unreadable, malformed, empty sequence)
  4  low-confidence detection (outputs are still written)
  5  evaluation found no overlap between prediction and ground truth
  6  no target: no eligible cluster, or too few frames to fit a trajectory";

#[derive(Parser)]
#[command(name = "uavtrace", version, about = "Unsupervised UAV trajectory estimation from LiDAR scans", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster, score and select the UAV, then fit its trajectory.
    #[command(after_help = EXIT_CODES)]
    Detect(DetectArgs),
    /// RMSE of a predicted trajectory against ground truth.
    #[command(after_help = EXIT_CODES)]
    Eval(EvalArgs),
    /// Generate a synthetic scan sequence and its ground truth.
    #[command(after_help = EXIT_CODES)]
    Synth(SynthArgs),
    /// Render points, ground truth and predictions as an SVG.
    #[command(after_help = EXIT_CODES)]
    Plot(PlotArgs),
}

#[derive(Args)]
struct DetectArgs {
    /// Scan CSV file or PCD series directory (overrides input.path).
    input: Option<PathBuf>,
    /// TOML pipeline config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<ScanFormat>,
    /// Output directory (overrides output.dir).
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    min_pts: Option<usize>,
    #[arg(long)]
    voxel_edge: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    window_len: Option<usize>,
    #[arg(long, value_parser = parse_schedule)]
    pair_schedule: Option<PairSchedule>,
    #[arg(long)]
    iou_floor: Option<f64>,
    #[arg(long)]
    min_margin: Option<f64>,
    /// Voxel cap for the size prefilter; 0 disables it.
    #[arg(long)]
    max_cluster_voxels: Option<usize>,
    /// Re-run DBSCAN inside every window.
    #[arg(long)]
    rerun_local_clustering: bool,
    #[arg(long)]
    outlier_gate: Option<f64>,
    #[arg(long)]
    max_degree: Option<usize>,
    #[arg(long, value_parser = parse_reducer)]
    reducer: Option<FrameReducer>,
    /// Sweep a parameter: `key=v1,v2,...` with key one of lambda, eps,
    /// voxel_edge, window_len. Repeat for a grid; each combination is
    /// written to its own subdirectory.
    #[arg(long)]
    sweep: Vec<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted trajectory CSV (`t,x,y,z`).
    prediction: PathBuf,
    /// Ground-truth trajectory CSV (`t,x,y,z`).
    ground_truth: PathBuf,
    /// TOML pipeline config; only `evaluation.max_dt` is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_dt: Option<f64>,
    /// Report JSON path.
    #[arg(long, short, default_value = "rmse.json")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML scene config.
    #[arg(conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scene: s1, s2 or randomized.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the config's rng_seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, value_parser = parse_format, default_value = "csv")]
    format: ScanFormat,
}

#[derive(Args)]
struct PlotArgs {
    /// Predicted trajectory CSVs.
    predictions: Vec<PathBuf>,
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Target points CSV, as written by `detect`.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long, short, default_value = "trajectory.svg")]
    out: PathBuf,
}

fn parse_format(s: &str) -> std::result::Result<ScanFormat, String> {
    s.parse()
}

fn parse_schedule(s: &str) -> std::result::Result<PairSchedule, String> {
    s.parse()
}

fn parse_reducer(s: &str) -> std::result::Result<FrameReducer, String> {
    s.parse()
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::output(path, e))
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn cmd_detect(a: DetectArgs) -> Result<u8> {
    let mut cfg = load_config(a.config.as_deref())?;
    let d = &mut cfg.detection;
    macro_rules! set {
        ($flag:expr => $field:expr) => {
            if let Some(v) = $flag {
                $field = v;
            }
        };
    }
    set!(a.eps => d.dbscan.eps);
    set!(a.min_pts => d.dbscan.min_pts);
    set!(a.voxel_edge => d.voxel_edge);
    set!(a.lambda => d.scoring.lambda);
    set!(a.window_len => d.scoring.window_len);
    set!(a.pair_schedule => d.scoring.pair_schedule);
    set!(a.iou_floor => d.scoring.iou_floor);
    set!(a.min_margin => d.scoring.min_margin);
    set!(a.outlier_gate => d.trajectory.outlier_gate);
    set!(a.max_degree => d.trajectory.max_degree);
    set!(a.reducer => d.trajectory.reducer);
    if let Some(v) = a.max_cluster_voxels {
        d.scoring.max_cluster_voxels = (v > 0).then_some(v);
    }
    if a.rerun_local_clustering {
        d.scoring.rerun_local_clustering = true;
    }
    cfg.input.path = a.input.or(cfg.input.path);
    cfg.input.format = a.format.or(cfg.input.format);
    cfg.output.dir = a.out.or(cfg.output.dir);
    cfg.validate()?;
    let sweep = a
        .sweep
        .iter()
        .map(|s| SweepAxis::parse(s))
        .collect::<Result<Vec<_>>>()?;

    let input = cfg
        .input
        .path
        .clone()
        .ok_or_else(|| CliError::Config("no input: pass a path or set input.path".into()))?;
    let job = detect::DetectJob {
        format: cfg.input.format.unwrap_or_else(|| detect::infer_format(&input)),
        input,
        out_dir: cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("uavtrace-out")),
        params: cfg.detection,
        config_file: a.config,
        sweep,
    };
    detect::run(&job)
}

fn cmd_eval(a: EvalArgs) -> Result<u8> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(v) = a.max_dt {
        cfg.evaluation.max_dt = v;
    }
    cfg.validate()?;
    eval::run(&a.prediction, &a.ground_truth, cfg.evaluation.max_dt, &a.out)?;
    Ok(error::EXIT_OK)
}

fn cmd_synth(a: SynthArgs) -> Result<u8> {
    let mut scene = match (&a.config, &a.preset) {
        (Some(path), None) => synth::load_scene_config(path)?,
        (None, Some(name)) => synth::preset(name, a.seed.unwrap_or(0))?,
        _ => return Err(CliError::Config("give either a scene config or --preset".into())),
    };
    if let Some(seed) = a.seed {
        scene.rng_seed = seed;
    }
    synth::run(&scene, &a.out, a.format)?;
    Ok(error::EXIT_OK)
}

fn cmd_plot(a: PlotArgs) -> Result<u8> {
    let input = plot::load(a.points.as_deref(), a.gt.as_deref(), &a.predictions)?;
    plot::run(&input, &a.out)?;
    Ok(error::EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
