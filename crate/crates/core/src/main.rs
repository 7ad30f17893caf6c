//! Command-line front end for the localization pipeline: scene presets,
//! measurement synthesis, batch solving, and Monte-Carlo evaluation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use locfuse::harness::{
    per_tp_stats, read_measurements, records_report, run_monte_carlo, solve_measurements,
    sync_sweep, synthesize_trials, write_estimates, write_json, write_measurements, write_per_tp,
    write_records, write_sweep, Algorithm,
};
use locfuse::joint::SolverConfig;
use locfuse::sim::{
    arena_scene, default_test_points, read_scene, read_test_points, write_scene, write_test_points,
    Scene, TrialConfig,
};
use locfuse::{Error, Result};

#[derive(Parser)]
#[command(
    name = "locfuse",
    version,
    about = "Probabilistic ToA+AoA indoor localization: synthesis, solving, and Monte-Carlo evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a built-in scene description.
    Preset {
        /// Preset name; `arena2036` is the built-in 20 m x 10 m hall.
        #[arg(long)]
        name: String,
        /// Output scene JSON path.
        #[arg(long)]
        out: PathBuf,
        /// Also write the preset's 28-point test grid to this CSV path.
        #[arg(long = "tps-out")]
        tps_out: Option<PathBuf>,
    },
    /// Synthesize measurement epochs at every test point.
    Simulate {
        /// Scene JSON file.
        #[arg(long)]
        scene: PathBuf,
        /// Test-point CSV file (label,x_m,y_m,z_m).
        #[arg(long)]
        tps: PathBuf,
        /// Epochs per test point.
        #[arg(long)]
        trials: usize,
        /// Master seed for the per-epoch random streams.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Synchronization error standard deviation (metres).
        #[arg(long = "sync-std-m", default_value_t = 0.0)]
        sync_std_m: f64,
        /// Output measurement CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a position for every epoch in a measurement file.
    Solve {
        /// Scene JSON file.
        #[arg(long)]
        scene: PathBuf,
        /// Measurement CSV file (from `simulate`).
        #[arg(long)]
        meas: PathBuf,
        /// Estimator: toa-nls, toa-map, aoa, or joint.
        #[arg(long)]
        algo: Algorithm,
        /// Output estimate CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON file with solver overrides.
        #[arg(long)]
        solver: Option<PathBuf>,
    },
    /// Synthesize, solve, and summarize in one paired run.
    Evaluate {
        /// Scene JSON file.
        #[arg(long)]
        scene: PathBuf,
        /// Test-point CSV file (label,x_m,y_m,z_m).
        #[arg(long)]
        tps: PathBuf,
        /// Epochs per test point.
        #[arg(long)]
        trials: usize,
        /// Master seed for the per-epoch random streams.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Synchronization error standard deviation (metres).
        #[arg(long = "sync-std-m", default_value_t = 0.0)]
        sync_std_m: f64,
        /// Comma-separated estimators to compare on identical data.
        #[arg(long, default_value = "toa-nls,toa-map,aoa,joint")]
        algos: String,
        /// Directory for records.csv, per_tp.csv, summary.json, cdf.json.
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        /// Optional JSON file with solver overrides.
        #[arg(long)]
        solver: Option<PathBuf>,
    },
    /// Evaluate toa-nls and joint across synchronization error levels.
    Sweep {
        /// Scene JSON file.
        #[arg(long)]
        scene: PathBuf,
        /// Test-point CSV file (label,x_m,y_m,z_m).
        #[arg(long)]
        tps: PathBuf,
        /// Epochs per test point.
        #[arg(long)]
        trials: usize,
        /// Master seed for the per-epoch random streams.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated synchronization levels (metres).
        #[arg(long, default_value = "0,0.5,1,2,4")]
        eta: String,
        /// Directory for sweep.csv.
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        /// Optional JSON file with solver overrides.
        #[arg(long)]
        solver: Option<PathBuf>,
    },
}

/// Optional solver settings, applied over the per-scene defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverOverrides {
    starts: Option<usize>,
    max_iterations: Option<usize>,
    gradient_tolerance: Option<f64>,
    step_initial_m: Option<f64>,
    tau_bounds_m: Option<(f64, f64)>,
    fixed_z: Option<f64>,
    seed: Option<u64>,
    /// Margin (metres) added around the scene box; default 2.
    bounds_inflation_m: Option<f64>,
}

fn solver_for(scene: &Scene, overrides_path: Option<&Path>) -> Result<SolverConfig> {
    let overrides = match overrides_path {
        None => SolverOverrides::default(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|source| Error::Json {
                path: path.to_owned(),
                source,
            })?
        }
    };
    let mut config = match overrides.bounds_inflation_m {
        None => SolverConfig::for_scene(scene),
        Some(margin) => {
            if !margin.is_finite() || margin < 0.0 {
                return Err(Error::invalid(format!(
                    "bounds_inflation_m must be non-negative, got {margin}"
                )));
            }
            SolverConfig::new(scene.bounds.inflate(margin))
        }
    };
    if let Some(v) = overrides.starts {
        config.starts = v;
    }
    if let Some(v) = overrides.max_iterations {
        config.max_iterations = v;
    }
    if let Some(v) = overrides.gradient_tolerance {
        config.gradient_tolerance = v;
    }
    if let Some(v) = overrides.step_initial_m {
        config.step_initial_m = v;
    }
    if let Some(v) = overrides.tau_bounds_m {
        config.tau_bounds_m = v;
    }
    if let Some(v) = overrides.fixed_z {
        config.fixed_z = Some(v);
    }
    if let Some(v) = overrides.seed {
        config.seed = v;
    }
    Ok(config)
}

fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    let algos: Vec<Algorithm> = list
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if algos.is_empty() {
        return Err(Error::invalid("no algorithms listed"));
    }
    Ok(algos)
}

fn parse_levels(list: &str) -> Result<Vec<f64>> {
    let levels: Vec<f64> = list
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::invalid(format!("invalid synchronization level {s:?}")))
        })
        .collect::<Result<_>>()?;
    if levels.is_empty() {
        return Err(Error::invalid("no synchronization levels listed"));
    }
    for &eta in &levels {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::invalid(format!(
                "synchronization levels must be non-negative, got {eta}"
            )));
        }
    }
    Ok(levels)
}

fn trial_config(
    tps_path: &Path,
    trials: usize,
    seed: u64,
    sync_std_m: f64,
) -> Result<TrialConfig> {
    let test_points = read_test_points(tps_path)?;
    TrialConfig::new(test_points, trials, seed)?.with_sync_std_m(sync_std_m)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preset { name, out, tps_out } => {
            let scene = match name.as_str() {
                "arena2036" => arena_scene(),
                other => {
                    return Err(Error::invalid(format!(
                        "unknown preset {other:?} (available: arena2036)"
                    )));
                }
            };
            write_scene(&out, &scene)?;
            println!("wrote scene {}", out.display());
            if let Some(tps_path) = tps_out {
                write_test_points(&tps_path, &default_test_points())?;
                println!("wrote test points {}", tps_path.display());
            }
        }
        Command::Simulate {
            scene,
            tps,
            trials,
            seed,
            sync_std_m,
            out,
        } => {
            let scene = read_scene(&scene)?;
            let config = trial_config(&tps, trials, seed, sync_std_m)?;
            let sets = synthesize_trials(&scene, &config)?;
            write_measurements(&out, &sets)?;
            println!(
                "wrote {} measurement sets ({} test points x {} epochs) to {}",
                sets.len(),
                config.test_points.len(),
                config.trials_per_point,
                out.display()
            );
        }
        Command::Solve {
            scene,
            meas,
            algo,
            out,
            solver,
        } => {
            let scene = read_scene(&scene)?;
            let solver = solver_for(&scene, solver.as_deref())?;
            let sets = read_measurements(&meas)?;
            let rows = solve_measurements(&scene, &sets, algo, &solver)?;
            let failures = rows.iter().filter(|r| !r.converged).count();
            write_estimates(&out, &rows)?;
            println!(
                "wrote {} estimates ({} unconverged) to {}",
                rows.len(),
                failures,
                out.display()
            );
        }
        Command::Evaluate {
            scene,
            tps,
            trials,
            seed,
            sync_std_m,
            algos,
            out_dir,
            solver,
        } => {
            let scene = read_scene(&scene)?;
            let solver = solver_for(&scene, solver.as_deref())?;
            let algorithms = parse_algorithms(&algos)?;
            let config = trial_config(&tps, trials, seed, sync_std_m)?;
            let records = run_monte_carlo(&scene, &config, &algorithms, &solver)?;
            let (summary, cdf) = records_report(&records)?;
            let per_tp = per_tp_stats(&records)?;
            fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            write_records(out_dir.join("records.csv"), &records)?;
            write_per_tp(out_dir.join("per_tp.csv"), &per_tp)?;
            write_json(out_dir.join("summary.json"), &summary)?;
            write_json(out_dir.join("cdf.json"), &cdf)?;
            for (name, stats) in &summary.algorithms {
                println!(
                    "{name}: mean {:.3} m, rms {:.3} m, p50 {:.3} m, p90 {:.3} m over {} trials",
                    stats.mean_m, stats.rms_m, stats.p50_m, stats.p90_m, stats.count
                );
            }
            println!("wrote records.csv, per_tp.csv, summary.json, cdf.json to {}", out_dir.display());
        }
        Command::Sweep {
            scene,
            tps,
            trials,
            seed,
            eta,
            out_dir,
            solver,
        } => {
            let scene = read_scene(&scene)?;
            let solver = solver_for(&scene, solver.as_deref())?;
            let levels = parse_levels(&eta)?;
            let config = trial_config(&tps, trials, seed, 0.0)?;
            let rows = sync_sweep(&scene, &config, &levels, &solver)?;
            fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            write_sweep(out_dir.join("sweep.csv"), &rows)?;
            for row in &rows {
                println!(
                    "eta {:.2} m, {}: p90 {:.3} m",
                    row.sync_std_m, row.algorithm, row.p90_m
                );
            }
            println!("wrote sweep.csv to {}", out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
