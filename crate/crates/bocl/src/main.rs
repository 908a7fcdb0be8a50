use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bocl::config::{overlay, read_table};
use bocl::dataset::truth::read_truth;
use bocl::dataset::{load_dataset, read_trajectory, Fidelity};
use bocl::evaluate::{evaluate, write_report, DEFAULT_BIN_WIDTH};
use bocl::pipeline::{solve_dataset, write_outputs, SolveConfig};
use bocl::simulator::trajectory::GenerateError;
use bocl::simulator::{generate_trajectory, spacing_sweep, NoiseModel, PathKind, TrajectorySpec};
use bocl::svg::heat_map;
use bocl_core::camera::CameraIntrinsics;
use bocl_core::imaging::{DetectorConfig, EnvironmentPreset};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "bocl", version, about = "Relative pose from mutually observed light pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with ground truth.
    Simulate(SimulateArgs),
    /// Solve every paired frame of a dataset.
    Solve(SolveArgs),
    /// Compare a solved trajectory with ground truth.
    Evaluate(EvaluateArgs),
    /// Range error against light spacing and range.
    Spacing(SpacingArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    out: PathBuf,
    /// TOML file with `[trajectory]` and `[noise]` tables; overrides flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "circle")]
    path: PathKind,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    frame_rate: Option<f64>,
    #[arg(long)]
    range: Option<f64>,
    #[arg(long)]
    start_range: Option<f64>,
    #[arg(long)]
    end_range: Option<f64>,
    #[arg(long)]
    center_range: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    /// Station ranges for `--path stations`, comma separated.
    #[arg(long, value_delimiter = ',')]
    stations: Option<Vec<f64>>,
    #[arg(long)]
    frames_per_station: Option<usize>,
    /// Light spacing, m.
    #[arg(long)]
    baseline: Option<f64>,
    #[arg(long, value_parser = parse_fidelity)]
    fidelity: Option<Fidelity>,
    #[arg(long)]
    environment: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pixel noise sigma, px.
    #[arg(long)]
    noise_pixel: Option<f64>,
    /// Expected distractor detections per image.
    #[arg(long)]
    distractors: Option<f64>,
    /// Beam elongation, px.
    #[arg(long)]
    elongation: Option<f64>,
    /// Turn off every noise source.
    #[arg(long)]
    zero_noise: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// TOML file mirroring the resolved config in the summary; overrides flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Select pairs with the consistency check only.
    #[arg(long)]
    camera_only: bool,
    /// Detection preset for image datasets.
    #[arg(long)]
    environment: Option<String>,
    #[arg(long)]
    sync_tolerance: Option<f64>,
    #[arg(long)]
    yaw_gate_deg: Option<f64>,
    #[arg(long)]
    depth_gate: Option<f64>,
    #[arg(long)]
    attitude_gate_deg: Option<f64>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    trajectory: PathBuf,
    /// Dataset root holding `truth/poses.csv`.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    bin_width: f64,
}

#[derive(Args)]
struct SpacingArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Light spacings, m.
    #[arg(long, value_delimiter = ',', default_values_t = [0.57, 0.65, 0.72, 0.8, 0.88])]
    d: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0])]
    ranges: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 1.0)]
    noise_pixel: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_fidelity(s: &str) -> Result<Fidelity, String> {
    match s {
        "detections" => Ok(Fidelity::Detections),
        "rendered" => Ok(Fidelity::Rendered),
        _ => Err(format!("unknown fidelity {s:?}")),
    }
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<serde_json::Value, Failure>;

fn create_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(v).expect("json value");
    text.push('\n');
    fs::write(path, text).map_err(Failure::runtime)
}

fn file_table(path: &Option<PathBuf>) -> Result<Option<toml::Table>, Failure> {
    path.as_ref().map(|p| read_table(p)).transpose().map_err(Failure::Config)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    trajectory: TrajectorySpec,
    noise: NoiseModel,
}

fn simulate(a: SimulateArgs) -> Outcome {
    let mut spec = TrajectorySpec {
        path: a.path,
        ..TrajectorySpec::default()
    };
    macro_rules! set {
        ($($field:ident <- $arg:expr),*) => { $(if let Some(v) = $arg { spec.$field = v; })* };
    }
    set!(frames <- a.frames, frame_rate <- a.frame_rate, range <- a.range,
        start_range <- a.start_range, end_range <- a.end_range,
        center_range <- a.center_range, radius <- a.radius, ranges <- a.stations,
        frames_per_station <- a.frames_per_station, baseline <- a.baseline,
        fidelity <- a.fidelity, environment <- a.environment);
    let mut noise = if a.zero_noise {
        NoiseModel::zero(a.seed)
    } else {
        NoiseModel {
            rng_seed: a.seed,
            ..NoiseModel::default()
        }
    };
    if let Some(v) = a.noise_pixel {
        noise.pixel_noise_sigma = v;
    }
    if let Some(v) = a.distractors {
        noise.distractor_rate = v;
    }
    if let Some(v) = a.elongation {
        noise.beam_elongation = v;
    }
    let mut cfg = SimulateConfig {
        trajectory: spec,
        noise,
    };
    if let Some(t) = file_table(&a.config)? {
        cfg = overlay(&cfg, &t).map_err(Failure::Config)?;
    }
    let report = generate_trajectory(&cfg.trajectory, &cfg.noise, &a.out).map_err(|e| match e {
        GenerateError::Config(m) => Failure::Config(m),
        GenerateError::Dataset(d) => Failure::runtime(d),
    })?;
    Ok(serde_json::json!({
        "command": "simulate",
        "out": a.out,
        "report": report,
        "config": cfg,
    }))
}

fn solve(a: SolveArgs) -> Outcome {
    let ds = load_dataset(&a.dataset).map_err(Failure::runtime)?;
    let same = |x: &Path, y: &Path| match (x.canonicalize(), y.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    };
    if same(&a.out, &a.dataset) {
        return Err(Failure::Config("--out must differ from the dataset directory".into()));
    }
    let preset = match &a.environment {
        Some(name) => EnvironmentPreset::from_name(name)
            .ok_or_else(|| Failure::Config(format!("unknown environment preset {name:?}")))?,
        None => ds.manifest.preset(),
    };
    let mut cfg = SolveConfig {
        camera_only: a.camera_only,
        detector: Some(DetectorConfig::for_environment(preset)),
        sync_tolerance: Some(a.sync_tolerance.unwrap_or(ds.manifest.sync_tolerance)),
        ..SolveConfig::default()
    };
    if let Some(v) = a.yaw_gate_deg {
        cfg.gates.yaw_gate = v.to_radians();
    }
    if let Some(v) = a.depth_gate {
        cfg.gates.depth_gate = v;
    }
    if let Some(v) = a.attitude_gate_deg {
        cfg.gates.attitude_gate = v.to_radians();
    }
    if let Some(t) = file_table(&a.config)? {
        cfg = overlay(&cfg, &t).map_err(Failure::Config)?;
    }
    if cfg.detector.is_some_and(|d| !d.threshold.is_valid()) {
        return Err(Failure::Config("detector threshold is out of range".into()));
    }
    if cfg.sync_tolerance.is_some_and(|t| !(t > 0.0)) {
        return Err(Failure::Config("sync_tolerance must be positive".into()));
    }
    create_out(&a.out)?;
    let output = solve_dataset(&ds, &cfg).map_err(Failure::runtime)?;
    write_outputs(&output, &a.out).map_err(Failure::runtime)?;
    let summary = serde_json::json!({
        "command": "solve",
        "dataset": a.dataset,
        "summary": output.summary,
    });
    write_json(&a.out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn evaluate_cmd(a: EvaluateArgs) -> Outcome {
    if !(a.bin_width > 0.0) {
        return Err(Failure::Config("--bin-width must be positive".into()));
    }
    let records = read_trajectory(&a.trajectory).map_err(Failure::runtime)?;
    let truth = read_truth(&a.truth)
        .map_err(Failure::runtime)?
        .ok_or_else(|| Failure::Runtime(format!("no ground truth under {}", a.truth.display())))?;
    let report = evaluate(&records, &truth, a.bin_width).map_err(Failure::runtime)?;
    create_out(&a.out)?;
    write_report(&report, &a.out).map_err(Failure::runtime)?;
    let summary = serde_json::json!({
        "command": "evaluate",
        "trajectory": a.trajectory,
        "bin_width": a.bin_width,
        "report": report,
    });
    write_json(&a.out.join("evaluation.json"), &summary)?;
    Ok(summary)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpacingConfig {
    d_values: Vec<f64>,
    ranges: Vec<f64>,
    trials: usize,
    intrinsics: CameraIntrinsics,
    noise: NoiseModel,
}

fn spacing(a: SpacingArgs) -> Outcome {
    let mut cfg = SpacingConfig {
        d_values: a.d,
        ranges: a.ranges,
        trials: a.trials,
        intrinsics: CameraIntrinsics::default_wide(),
        noise: NoiseModel {
            pixel_noise_sigma: a.noise_pixel,
            ..NoiseModel::zero(a.seed)
        },
    };
    if let Some(t) = file_table(&a.config)? {
        cfg = overlay(&cfg, &t).map_err(Failure::Config)?;
    }
    let rows = spacing_sweep(&cfg.d_values, &cfg.ranges, &cfg.intrinsics, &cfg.noise, cfg.trials)
        .map_err(Failure::Config)?;
    create_out(&a.out)?;
    let mut csv = String::from("d,range,trials,failures,rms_error,mean_abs_error\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{},{}", r.d, r.range, r.trials, r.failures, r.rms_error, r.mean_abs_error);
    }
    fs::write(a.out.join("spacing.csv"), csv).map_err(Failure::runtime)?;
    let grid: Vec<Vec<f64>> = rows.chunks(cfg.ranges.len()).map(|c| c.iter().map(|r| r.rms_error).collect()).collect();
    let svg = heat_map("RMS range error (m)", "light spacing d (m)", "range (m)", &cfg.d_values, &cfg.ranges, &grid);
    fs::write(a.out.join("spacing.svg"), svg).map_err(Failure::runtime)?;
    Ok(serde_json::json!({
        "command": "spacing",
        "config": cfg,
        "rows": rows,
    }))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Solve(a) => solve(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Spacing(a) => spacing(a),
    };
    match outcome {
        Ok(v) => {
            println!("{}", serde_json::to_string(&v).expect("json value"));
            ExitCode::SUCCESS
        }
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
