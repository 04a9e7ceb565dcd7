use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gsicp::eval::{evaluate, DEFAULT_MAX_DT};
use gsicp::io::{load_sim_config, read_poses, run_dataset, write_dataset, Dataset, RunConfig, StrategyName};
use gsicp::sim::{simulate, SceneKind, SimConfig};
use gsicp::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "gsicp", version, about = "Prior-guided, stability-gated ICP for depth-sensor odometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register every frame of a dataset and write a run report.
    Run(RunArgs),
    /// Render a synthetic dataset with ground truth.
    Simulate(SimulateArgs),
    /// Compare a trajectory against ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Dataset directory (clouds/, odometry.txt, optional ground_truth.txt).
    dataset: PathBuf,
    /// Report directory.
    #[arg(long, short)]
    output: PathBuf,
    /// Pipeline parameters (TOML); omitted keys keep their defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Seed for sampling and RANSAC.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    strategy: Option<StrategyName>,
    /// Run ICP even when the sample is geometrically unstable.
    #[arg(long)]
    disable_gate: bool,
    /// Frames merged per registration.
    #[arg(long)]
    merge_window: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Dataset directory to create.
    #[arg(long, short)]
    output: PathBuf,
    /// Simulation description (TOML). Without it, `--scene` selects a preset.
    #[arg(long, short, conflicts_with = "scene")]
    config: Option<PathBuf>,
    /// Preset scene: flat_wall, symmetric_canyon, corner, room or box_field.
    #[arg(long, value_parser = parse_scene)]
    scene: Option<SceneKind>,
    /// Frame count for a preset scene.
    #[arg(long, default_value_t = 60, conflicts_with = "config")]
    frames: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Estimated poses.
    trajectory: PathBuf,
    /// Reference poses.
    ground_truth: PathBuf,
    /// Also write the metrics as JSON to this file.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_scene(s: &str) -> Result<SceneKind, String> {
    SceneKind::ALL
        .into_iter()
        .find(|k| scene_name(*k) == s)
        .ok_or_else(|| format!("unknown scene '{s}'"))
}

fn scene_name(k: SceneKind) -> String {
    serde_json::to_value(k).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: Error,
}

fn data(error: Error) -> Failure {
    let code = match error {
        Error::BadParams(_) => EXIT_CONFIG,
        _ => EXIT_DATA,
    };
    Failure { code, error }
}

fn config(error: Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        error,
    }
}

fn output(error: Error) -> Failure {
    Failure {
        code: EXIT_FAILURE,
        error,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(a: RunArgs) -> Result<(), Failure> {
    let mut rc = match &a.config {
        Some(path) => RunConfig::load(path).map_err(config)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = a.seed {
        rc.seed = seed;
    }
    if let Some(strategy) = a.strategy {
        rc.strategy = strategy;
    }
    if a.disable_gate {
        rc.gate_enabled = false;
    }
    if let Some(m) = a.merge_window {
        rc.merge_window = m;
    }
    // parameter errors surface before any dataset I/O
    rc.to_pipeline(None).map_err(config)?;
    let ds = Dataset::open(&a.dataset).map_err(data)?;
    let cfg = rc.to_pipeline(ds.extrinsics.as_ref()).map_err(config)?;
    let report = run_dataset(&ds, &cfg).map_err(data)?;
    write_fresh(&a.output, |dir| report.write(dir))?;

    let counts: Vec<String> = report
        .summary
        .provenance
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(k, n)| format!("{k} {n}"))
        .collect();
    eprintln!("{} frames: {}", report.summary.frames, counts.join(", "));
    if let Some(m) = &report.summary.metrics {
        eprintln!("ATE RMSE {:.4} m", m.ate.rmse);
    }
    Ok(())
}

fn simulate_cmd(a: SimulateArgs) -> Result<(), Failure> {
    let cfg = match (&a.config, a.scene) {
        (Some(path), _) => load_sim_config(path).map_err(config)?,
        (None, Some(scene)) => SimConfig::preset(scene, a.frames),
        (None, None) => {
            return Err(config(Error::BadParams("simulate needs --config or --scene".into())));
        }
    };
    let cfg = match a.seed {
        Some(seed) => cfg.with_seed(seed),
        None => cfg,
    };
    let seq = simulate(&cfg).map_err(config)?;
    write_fresh(&a.output, |dir| write_dataset(dir, &seq))?;
    eprintln!("{} frames written to {}", seq.frames.len(), a.output.display());
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<(), Failure> {
    let est = read_poses(&a.trajectory).map_err(data)?;
    let truth = read_poses(&a.ground_truth).map_err(data)?;
    let metrics = evaluate(&est, &truth, DEFAULT_MAX_DT).map_err(data)?;
    let text = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    if let Some(path) = &a.output {
        std::fs::write(path, format!("{text}\n")).map_err(|e| output(Error::Io {
            path: path.clone(),
            source: e,
        }))?;
    }
    println!("{text}");
    Ok(())
}

/// Runs `write` into `dir`. If it fails, everything this call created is
/// removed again; a directory that already existed keeps its other files.
fn write_fresh(dir: &Path, write: impl FnOnce(&Path) -> gsicp::Result<()>) -> Result<(), Failure> {
    let existed = dir.exists();
    match write(dir) {
        Ok(()) => Ok(()),
        Err(e) => {
            if !existed {
                let _ = std::fs::remove_dir_all(dir);
            }
            Err(output(e))
        }
    }
}
