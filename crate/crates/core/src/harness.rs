//! Monte-Carlo evaluation: paired trials, error statistics, and the file
//! formats that carry them.
//!
//! The design is *paired*: each (test point, epoch) pair synthesizes one
//! measurement set, and every requested algorithm runs on that identical
//! set, so algorithm comparisons are common-random-number comparisons.
//! Per-epoch randomness comes from [`epoch_rng`], with the transmit offset
//! drawn first, then the ToA draws, then the AoA draws; the draw count does
//! not depend on the synchronization level, so sweeps over η are paired
//! too.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aoa::{aoa_estimate, AoaMeasurement};
use crate::error::{Error, Result};
use crate::geometry::{horizontal_error, Point3, UnitVec3};
use crate::joint::{joint_estimate, Estimate, SolverConfig};
use crate::sim::{csv_error, epoch_rng, synthesize_aoa, synthesize_toa, Scene, TrialConfig};
use crate::toa::{map_toa_estimate, nls_estimate, ToaMeasurement};

/// Interval (metres) the per-epoch transmit offset is drawn from.
const TAU_DRAW_RANGE_M: (f64, f64) = (-30.0, 30.0);

// ---------------------------------------------------------------------------
// Algorithms
// ---------------------------------------------------------------------------

/// The estimators the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    ToaNls,
    ToaMap,
    Aoa,
    Joint,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::ToaNls,
        Algorithm::ToaMap,
        Algorithm::Aoa,
        Algorithm::Joint,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::ToaNls => "toa_nls",
            Algorithm::ToaMap => "toa_map",
            Algorithm::Aoa => "aoa",
            Algorithm::Joint => "joint",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    /// Accepts both the record form (`toa_nls`) and the flag form
    /// (`toa-nls`).
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "toa_nls" => Ok(Algorithm::ToaNls),
            "toa_map" => Ok(Algorithm::ToaMap),
            "aoa" => Ok(Algorithm::Aoa),
            "joint" => Ok(Algorithm::Joint),
            other => Err(Error::invalid(format!(
                "unknown algorithm {other:?} (expected toa-nls, toa-map, aoa, or joint)"
            ))),
        }
    }
}

impl Serialize for Algorithm {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Measurement sets
// ---------------------------------------------------------------------------

/// Everything one epoch observed at one test point.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub tp_label: String,
    pub epoch: u64,
    pub toa: Vec<ToaMeasurement>,
    pub aoa: Vec<AoaMeasurement>,
}

/// Synthesizes the full trial grid: every test point, every epoch, one
/// measurement set each, with the per-epoch transmit offset drawn uniformly
/// from ±30 m before the measurement draws.
pub fn synthesize_trials(scene: &Scene, config: &TrialConfig) -> Result<Vec<MeasurementSet>> {
    config.validate()?;
    for tp in &config.test_points {
        if !scene.bounds.contains(&tp.position) {
            return Err(Error::invalid(format!(
                "test point {:?} lies outside the scene bounds",
                tp.label
            )));
        }
    }
    let mut sets = Vec::with_capacity(config.test_points.len() * config.trials_per_point);
    for (tp_index, tp) in config.test_points.iter().enumerate() {
        for epoch in 0..config.trials_per_point as u64 {
            let mut rng = epoch_rng(config.seed, tp_index as u64, epoch);
            let tau = rng.random_range(TAU_DRAW_RANGE_M.0..TAU_DRAW_RANGE_M.1);
            let toa = synthesize_toa(scene, &tp.position, tau, config.sync_std_m, &mut rng);
            let aoa = synthesize_aoa(scene, &tp.position, &mut rng)?;
            sets.push(MeasurementSet {
                tp_label: tp.label.clone(),
                epoch,
                toa,
                aoa,
            });
        }
    }
    Ok(sets)
}

// ---------------------------------------------------------------------------
// Trial records
// ---------------------------------------------------------------------------

/// One algorithm's answer on one measurement set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub tp_label: String,
    pub epoch: u64,
    pub algorithm: Algorithm,
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
    /// Empty for estimators that do not solve for the transmit offset.
    pub tau_m: Option<f64>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: u64,
    pub start_index: u64,
    pub horiz_err_m: f64,
}

impl TrialRecord {
    pub fn position(&self) -> Point3 {
        Point3::new(self.x_m, self.y_m, self.z_m)
    }

    fn from_estimate(
        tp_label: &str,
        epoch: u64,
        algorithm: Algorithm,
        estimate: &Estimate,
        truth: &Point3,
    ) -> Self {
        TrialRecord {
            tp_label: tp_label.to_owned(),
            epoch,
            algorithm,
            x_m: estimate.position.x,
            y_m: estimate.position.y,
            z_m: estimate.position.z,
            tau_m: estimate.transmit_time.map(|t| t.offset_m),
            objective: estimate.objective,
            converged: estimate.converged,
            iterations: estimate.iterations as u64,
            start_index: estimate.start_index as u64,
            horiz_err_m: horizontal_error(&estimate.position, truth),
        }
    }

    /// Stand-in row for a trial whose solve returned an error: the scene
    /// center with `converged = false` and a −∞ objective.
    fn failure(
        tp_label: &str,
        epoch: u64,
        algorithm: Algorithm,
        scene: &Scene,
        truth: &Point3,
    ) -> Self {
        let center = scene.bounds.center();
        TrialRecord {
            tp_label: tp_label.to_owned(),
            epoch,
            algorithm,
            x_m: center.x,
            y_m: center.y,
            z_m: center.z,
            tau_m: None,
            objective: f64::NEG_INFINITY,
            converged: false,
            iterations: 0,
            start_index: 0,
            horiz_err_m: horizontal_error(&center, truth),
        }
    }
}

/// Runs one estimator on one measurement set.
pub fn run_algorithm(
    scene: &Scene,
    algorithm: Algorithm,
    set: &MeasurementSet,
    solver: &SolverConfig,
) -> Result<Estimate> {
    match algorithm {
        Algorithm::ToaNls => nls_estimate(&scene.toa_locators, &set.toa, solver),
        Algorithm::ToaMap => {
            map_toa_estimate(&scene.toa_locators, &scene.toa_noise, &set.toa, solver)
        }
        Algorithm::Aoa => aoa_estimate(&scene.aoa_locators, &set.aoa, solver),
        Algorithm::Joint => joint_estimate(scene, &set.toa, &set.aoa, solver),
    }
}

/// Runs every requested algorithm on every synthesized measurement set,
/// paired. A trial whose solve errors becomes a failure record rather than
/// aborting the run. Records come back in (test point, epoch, algorithm)
/// order, `|TPs| × trials × |algorithms|` of them.
pub fn run_monte_carlo(
    scene: &Scene,
    config: &TrialConfig,
    algorithms: &[Algorithm],
    solver: &SolverConfig,
) -> Result<Vec<TrialRecord>> {
    if algorithms.is_empty() {
        return Err(Error::invalid("no algorithms requested"));
    }
    let mut seen = Vec::new();
    for algorithm in algorithms {
        if seen.contains(algorithm) {
            return Err(Error::invalid(format!(
                "algorithm {algorithm} requested twice"
            )));
        }
        seen.push(*algorithm);
    }
    let sets = synthesize_trials(scene, config)?;
    let truth_of: BTreeMap<&str, &Point3> = config
        .test_points
        .iter()
        .map(|tp| (tp.label.as_str(), &tp.position))
        .collect();
    let mut records = Vec::with_capacity(sets.len() * algorithms.len());
    for set in &sets {
        let truth = truth_of[set.tp_label.as_str()];
        for &algorithm in algorithms {
            let record = match run_algorithm(scene, algorithm, set, solver) {
                Ok(est) => {
                    TrialRecord::from_estimate(&set.tp_label, set.epoch, algorithm, &est, truth)
                }
                Err(_) => TrialRecord::failure(&set.tp_label, set.epoch, algorithm, scene, truth),
            };
            records.push(record);
        }
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// Location-error summary of one batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean_m: f64,
    /// Root of the mean *squared* error — never below the mean.
    pub rms_m: f64,
    pub p50_m: f64,
    pub p90_m: f64,
    pub count: u64,
}

fn checked_errors(errors: &[f64], caller: &str) -> Result<Vec<f64>> {
    if errors.is_empty() {
        return Err(Error::invalid(format!("{caller}: no errors to summarize")));
    }
    for &e in errors {
        if !e.is_finite() || e < 0.0 {
            return Err(Error::invalid(format!(
                "{caller}: errors must be finite and non-negative, got {e}"
            )));
        }
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Nearest-rank quantile of an ascending slice: the ⌈q·n⌉-th smallest.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Mean, RMS, and nearest-rank 50th/90th percentiles of a batch of errors.
pub fn summarize(errors: &[f64]) -> Result<ErrorStats> {
    let sorted = checked_errors(errors, "summarize")?;
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let rms = (sorted.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    Ok(ErrorStats {
        mean_m: mean,
        rms_m: rms,
        p50_m: nearest_rank(&sorted, 0.5),
        p90_m: nearest_rank(&sorted, 0.9),
        count: sorted.len() as u64,
    })
}

/// Empirical CDF points `(e_(k), k/n)` over the sorted errors.
pub fn error_cdf(errors: &[f64]) -> Result<Vec<(f64, f64)>> {
    let sorted = checked_errors(errors, "error_cdf")?;
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, (i + 1) as f64 / n))
        .collect())
}

/// Per-test-point, per-algorithm error moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerTpRow {
    pub tp_label: String,
    pub algorithm: Algorithm,
    pub mean_m: f64,
    /// Population standard deviation (n in the denominator).
    pub std_m: f64,
    pub count: u64,
}

/// Groups records by (test point, algorithm) and reports the mean and
/// population standard deviation of the horizontal error in each group,
/// sorted by label then algorithm.
pub fn per_tp_stats(records: &[TrialRecord]) -> Result<Vec<PerTpRow>> {
    if records.is_empty() {
        return Err(Error::invalid("per_tp_stats: no records"));
    }
    let mut groups: BTreeMap<(String, Algorithm), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.tp_label.clone(), r.algorithm))
            .or_default()
            .push(r.horiz_err_m);
    }
    Ok(groups
        .into_iter()
        .map(|((tp_label, algorithm), errors)| {
            let n = errors.len() as f64;
            let mean = errors.iter().sum::<f64>() / n;
            let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
            PerTpRow {
                tp_label,
                algorithm,
                mean_m: mean,
                std_m: var.sqrt(),
                count: errors.len() as u64,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Synchronization sweep
// ---------------------------------------------------------------------------

/// One (η, algorithm) cell of a synchronization sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sync_std_m: f64,
    pub algorithm: Algorithm,
    pub mean_m: f64,
    pub rms_m: f64,
    pub p50_m: f64,
    pub p90_m: f64,
    pub count: u64,
}

impl SweepRow {
    pub fn stats(&self) -> ErrorStats {
        ErrorStats {
            mean_m: self.mean_m,
            rms_m: self.rms_m,
            p50_m: self.p50_m,
            p90_m: self.p90_m,
            count: self.count,
        }
    }
}

/// Reruns the Monte-Carlo grid at each synchronization level for the
/// synchronization-sensitive estimator and the joint estimator. All levels
/// share every other random draw, so differences are attributable to η
/// alone.
pub fn sync_sweep(
    scene: &Scene,
    config: &TrialConfig,
    sync_levels_m: &[f64],
    solver: &SolverConfig,
) -> Result<Vec<SweepRow>> {
    if sync_levels_m.is_empty() {
        return Err(Error::invalid("sync_sweep: no synchronization levels"));
    }
    let algorithms = [Algorithm::ToaNls, Algorithm::Joint];
    let mut rows = Vec::with_capacity(sync_levels_m.len() * algorithms.len());
    for &eta in sync_levels_m {
        let level_config = config.clone().with_sync_std_m(eta)?;
        let records = run_monte_carlo(scene, &level_config, &algorithms, solver)?;
        for algorithm in algorithms {
            let errors: Vec<f64> = records
                .iter()
                .filter(|r| r.algorithm == algorithm)
                .map(|r| r.horiz_err_m)
                .collect();
            let stats = summarize(&errors)?;
            rows.push(SweepRow {
                sync_std_m: eta,
                algorithm,
                mean_m: stats.mean_m,
                rms_m: stats.rms_m,
                p50_m: stats.p50_m,
                p90_m: stats.p90_m,
                count: stats.count,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Measurement files (CSV)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MeasurementRow {
    epoch_id: u64,
    tp_label: String,
    locator_id: String,
    #[serde(rename = "type")]
    kind: String,
    value_m: Option<f64>,
    ux: Option<f64>,
    uy: Option<f64>,
    uz: Option<f64>,
    kappa: Option<f64>,
}

/// Writes measurement sets as a flat CSV: one row per measurement, ToA rows
/// carrying `value_m` and AoA rows carrying `ux,uy,uz,kappa`.
pub fn write_measurements(path: impl AsRef<Path>, sets: &[MeasurementSet]) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for set in sets {
        for m in &set.toa {
            writer
                .serialize(MeasurementRow {
                    epoch_id: set.epoch,
                    tp_label: set.tp_label.clone(),
                    locator_id: m.locator_id.clone(),
                    kind: "toa".into(),
                    value_m: Some(m.range_m),
                    ux: None,
                    uy: None,
                    uz: None,
                    kappa: None,
                })
                .map_err(|e| csv_error(path, e))?;
        }
        for m in &set.aoa {
            writer
                .serialize(MeasurementRow {
                    epoch_id: set.epoch,
                    tp_label: set.tp_label.clone(),
                    locator_id: m.locator_id.clone(),
                    kind: "aoa".into(),
                    value_m: None,
                    ux: Some(m.direction.x()),
                    uy: Some(m.direction.y()),
                    uz: Some(m.direction.z()),
                    kappa: m.concentration_override,
                })
                .map_err(|e| csv_error(path, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a measurement CSV back into sets, grouped by (test point, epoch)
/// in file order. Rows missing the fields their type requires are rejected
/// with the offending line number.
pub fn read_measurements(path: impl AsRef<Path>) -> Result<Vec<MeasurementSet>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut sets: Vec<MeasurementSet> = Vec::new();
    let mut index: BTreeMap<(String, u64), usize> = BTreeMap::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let row: MeasurementRow = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::csv(path, line, e.to_string()))?;
        let key = (row.tp_label.clone(), row.epoch_id);
        let slot = *index.entry(key).or_insert_with(|| {
            sets.push(MeasurementSet {
                tp_label: row.tp_label.clone(),
                epoch: row.epoch_id,
                toa: Vec::new(),
                aoa: Vec::new(),
            });
            sets.len() - 1
        });
        match row.kind.as_str() {
            "toa" => {
                let value = row.value_m.ok_or_else(|| {
                    Error::csv(path, line, "toa row is missing value_m")
                })?;
                if !value.is_finite() {
                    return Err(Error::csv(path, line, "value_m must be finite"));
                }
                sets[slot]
                    .toa
                    .push(ToaMeasurement::new(row.locator_id, value));
            }
            "aoa" => {
                let (ux, uy, uz) = match (row.ux, row.uy, row.uz) {
                    (Some(ux), Some(uy), Some(uz)) => (ux, uy, uz),
                    _ => {
                        return Err(Error::csv(path, line, "aoa row is missing ux/uy/uz"));
                    }
                };
                let kappa = row
                    .kappa
                    .ok_or_else(|| Error::csv(path, line, "aoa row is missing kappa"))?;
                let direction = UnitVec3::new(ux, uy, uz)
                    .map_err(|e| Error::csv(path, line, e.to_string()))?;
                let measurement = AoaMeasurement::new(row.locator_id, direction)
                    .with_concentration(kappa)
                    .map_err(|e| Error::csv(path, line, e.to_string()))?;
                sets[slot].aoa.push(measurement);
            }
            other => {
                return Err(Error::csv(
                    path,
                    line,
                    format!("unknown measurement type {other:?}"),
                ));
            }
        }
    }
    if sets.is_empty() {
        return Err(Error::invalid(format!(
            "measurement file {} contains no rows",
            path.display()
        )));
    }
    Ok(sets)
}

// ---------------------------------------------------------------------------
// Record, estimate, and summary files
// ---------------------------------------------------------------------------

pub fn write_records(path: impl AsRef<Path>, records: &[TrialRecord]) -> Result<()> {
    write_csv_rows(path, records)
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    read_csv_rows(path)
}

pub fn write_per_tp(path: impl AsRef<Path>, rows: &[PerTpRow]) -> Result<()> {
    write_csv_rows(path, rows)
}

pub fn write_sweep(path: impl AsRef<Path>, rows: &[SweepRow]) -> Result<()> {
    write_csv_rows(path, rows)
}

pub fn read_sweep(path: impl AsRef<Path>) -> Result<Vec<SweepRow>> {
    read_csv_rows(path)
}

/// One row of a `solve` output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub tp_label: String,
    pub epoch_id: u64,
    pub algorithm: Algorithm,
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
    pub tau_m: Option<f64>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: u64,
    pub start_index: u64,
}

impl EstimateRow {
    pub fn new(set: &MeasurementSet, algorithm: Algorithm, estimate: &Estimate) -> Self {
        EstimateRow {
            tp_label: set.tp_label.clone(),
            epoch_id: set.epoch,
            algorithm,
            x_m: estimate.position.x,
            y_m: estimate.position.y,
            z_m: estimate.position.z,
            tau_m: estimate.transmit_time.map(|t| t.offset_m),
            objective: estimate.objective,
            converged: estimate.converged,
            iterations: estimate.iterations as u64,
            start_index: estimate.start_index as u64,
        }
    }
}

/// Runs one estimator over every measurement set, turning per-set solve
/// errors into `converged = false` rows at the scene center rather than
/// aborting the batch.
pub fn solve_measurements(
    scene: &Scene,
    sets: &[MeasurementSet],
    algorithm: Algorithm,
    solver: &SolverConfig,
) -> Result<Vec<EstimateRow>> {
    if sets.is_empty() {
        return Err(Error::invalid("solve_measurements: no measurement sets"));
    }
    Ok(sets
        .iter()
        .map(|set| match run_algorithm(scene, algorithm, set, solver) {
            Ok(est) => EstimateRow::new(set, algorithm, &est),
            Err(_) => {
                let center = scene.bounds.center();
                EstimateRow {
                    tp_label: set.tp_label.clone(),
                    epoch_id: set.epoch,
                    algorithm,
                    x_m: center.x,
                    y_m: center.y,
                    z_m: center.z,
                    tau_m: None,
                    objective: f64::NEG_INFINITY,
                    converged: false,
                    iterations: 0,
                    start_index: 0,
                }
            }
        })
        .collect())
}

pub fn write_estimates(path: impl AsRef<Path>, rows: &[EstimateRow]) -> Result<()> {
    write_csv_rows(path, rows)
}

pub fn read_estimates(path: impl AsRef<Path>) -> Result<Vec<EstimateRow>> {
    read_csv_rows(path)
}

fn write_csv_rows<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read_csv_rows<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push(
            record
                .deserialize(Some(&headers))
                .map_err(|e| Error::csv(path, line, e.to_string()))?,
        );
    }
    Ok(rows)
}

/// Per-algorithm summary statistics, keyed by algorithm name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithms: BTreeMap<String, ErrorStats>,
}

/// Per-algorithm CDF points, keyed by algorithm name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfReport {
    pub algorithms: BTreeMap<String, Vec<(f64, f64)>>,
}

/// Builds the per-algorithm summary and CDF report from trial records.
pub fn records_report(records: &[TrialRecord]) -> Result<(Summary, CdfReport)> {
    if records.is_empty() {
        return Err(Error::invalid("records_report: no records"));
    }
    let mut by_algo: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_algo
            .entry(r.algorithm.name().to_owned())
            .or_default()
            .push(r.horiz_err_m);
    }
    let mut summary = BTreeMap::new();
    let mut cdf = BTreeMap::new();
    for (name, errors) in by_algo {
        summary.insert(name.clone(), summarize(&errors)?);
        cdf.insert(name, error_cdf(&errors)?);
    }
    Ok((
        Summary {
            algorithms: summary,
        },
        CdfReport { algorithms: cdf },
    ))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut json = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    json.push('\n');
    fs::write(path, json).map_err(|e| Error::io(path, e))
}
