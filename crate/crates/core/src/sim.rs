//! Scenes, trial configuration, and forward measurement synthesis.
//!
//! The world frame puts the origin at one corner of the service area with
//! `z` up. The built-in preset mirrors a 20 m × 10 m hall with a co-located
//! ToA/AoA locator pair in each corner at 7.3 m height, boresights aimed at
//! the area center on the floor.
//!
//! Randomness follows one documented stream-splitting rule: every
//! (test point, epoch) pair owns a private ChaCha12 stream derived from the
//! master seed via [`epoch_rng`], so trials are reproducible in isolation
//! and independent of how many other trials run. Within an epoch the draw
//! order is fixed: per ToA locator a bias component pick, a bias normal, a
//! receiver-noise normal, and a synchronization normal (scaled by η, so the
//! η = 0 stream is identical); then per AoA locator the two direction
//! draws.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::aoa::AoaMeasurement;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, AoaLocator, Point3, ToaLocator};
use crate::probability::{GaussianComponent, GaussianMixture, VonMisesFisher};
use crate::toa::{ToaMeasurement, ToaNoiseModel};

// ---------------------------------------------------------------------------
// Scene
// ---------------------------------------------------------------------------

/// A full deployment: locators, the range noise model, and world bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub toa_locators: Vec<ToaLocator>,
    pub aoa_locators: Vec<AoaLocator>,
    pub toa_noise: ToaNoiseModel,
    pub bounds: Aabb,
}

impl Scene {
    pub fn new(
        toa_locators: Vec<ToaLocator>,
        aoa_locators: Vec<AoaLocator>,
        toa_noise: ToaNoiseModel,
        bounds: Aabb,
    ) -> Result<Self> {
        if toa_locators.is_empty() && aoa_locators.is_empty() {
            return Err(Error::invalid("scene needs at least one locator"));
        }
        if bounds.min.x >= bounds.max.x || bounds.min.y >= bounds.max.y {
            return Err(Error::invalid(
                "scene bounds must have positive extent in x and y",
            ));
        }
        let mut seen = BTreeSet::new();
        for l in &toa_locators {
            if !seen.insert(l.id.as_str()) {
                return Err(Error::invalid(format!("duplicate ToA locator id {:?}", l.id)));
            }
            if !l.position.is_finite() {
                return Err(Error::invalid(format!(
                    "ToA locator {:?} has a non-finite position",
                    l.id
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for l in &aoa_locators {
            if !seen.insert(l.id.as_str()) {
                return Err(Error::invalid(format!("duplicate AoA locator id {:?}", l.id)));
            }
            if !l.position.is_finite() {
                return Err(Error::invalid(format!(
                    "AoA locator {:?} has a non-finite position",
                    l.id
                )));
            }
        }
        for (id, _) in toa_noise.locator_overrides() {
            if !toa_locators.iter().any(|l| l.id == id) {
                return Err(Error::UnknownLocator { id: id.to_owned() });
            }
        }
        Ok(Scene {
            toa_locators,
            aoa_locators,
            toa_noise,
            bounds,
        })
    }
}

/// The built-in 20 m × 10 m hall: four co-located ToA/AoA locator pairs in
/// the corners at 7.3 m, AoA boresights aimed at the floor-level area
/// center, and the heuristic noise defaults (single zero-mean unit-variance
/// bias component, σ² = 1e-5 m², κ = 10).
pub fn arena_scene() -> Scene {
    let corners = [
        (0.0, 0.0),
        (20.0, 0.0),
        (0.0, 10.0),
        (20.0, 10.0),
    ];
    let height = 7.3;
    let center = Point3::new(10.0, 5.0, 0.0);
    let toa_locators: Vec<ToaLocator> = corners
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| ToaLocator::new(format!("toa-{}", i + 1), Point3::new(x, y, height)))
        .collect();
    let aoa_locators: Vec<AoaLocator> = corners
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let position = Point3::new(x, y, height);
            let dir = (center.vector() - position.vector()).normalize();
            // Boresight = rotated local +x; z-y'-x'' angles that point it
            // along `dir`: yaw in the floor plane, pitch tips it down.
            let yaw = dir.y.atan2(dir.x);
            let pitch = (-dir.z).asin();
            AoaLocator::new(format!("aoa-{}", i + 1), position, [yaw, pitch, 0.0], 10.0)
                .expect("valid preset concentration")
        })
        .collect();
    let noise = ToaNoiseModel::new(
        1e-5,
        GaussianMixture::single(0.0, 1.0).expect("valid preset bias"),
    )
    .expect("valid preset noise");
    let bounds = Aabb::new(Point3::new(0.0, 0.0, 0.0), Point3::new(20.0, 10.0, 7.3))
        .expect("valid preset bounds");
    Scene::new(toa_locators, aoa_locators, noise, bounds).expect("valid preset scene")
}

// ---------------------------------------------------------------------------
// Test points and trial configuration
// ---------------------------------------------------------------------------

/// A labeled ground-truth position.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPoint {
    pub label: String,
    pub position: Point3,
}

/// A 7 × 4 grid of 28 test points inset 1.5 m from the area boundary at
/// 1.0 m height, labeled A01..A28 row by row (y outer, x inner).
pub fn default_test_points() -> Vec<TestPoint> {
    let mut points = Vec::with_capacity(28);
    for row in 0..4 {
        for col in 0..7 {
            let label = format!("A{:02}", row * 7 + col + 1);
            let x = 1.5 + col as f64 * (17.0 / 6.0);
            let y = 1.5 + row as f64 * (7.0 / 3.0);
            points.push(TestPoint {
                label,
                position: Point3::new(x, y, 1.0),
            });
        }
    }
    points
}

/// What to simulate: where, how often, and under which synchronization
/// error.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub test_points: Vec<TestPoint>,
    pub trials_per_point: usize,
    /// Standard deviation η (metres) of the additive synchronization error.
    pub sync_std_m: f64,
    pub seed: u64,
}

impl TrialConfig {
    pub fn new(test_points: Vec<TestPoint>, trials_per_point: usize, seed: u64) -> Result<Self> {
        let config = TrialConfig {
            test_points,
            trials_per_point,
            sync_std_m: 0.0,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_sync_std_m(mut self, sync_std_m: f64) -> Result<Self> {
        self.sync_std_m = sync_std_m;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.test_points.is_empty() {
            return Err(Error::invalid("trial config needs at least one test point"));
        }
        let mut seen = BTreeSet::new();
        for tp in &self.test_points {
            if !seen.insert(tp.label.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate test-point label {:?}",
                    tp.label
                )));
            }
            if !tp.position.is_finite() {
                return Err(Error::invalid(format!(
                    "test point {:?} has a non-finite position",
                    tp.label
                )));
            }
        }
        if self.trials_per_point == 0 {
            return Err(Error::invalid("trials_per_point must be at least 1"));
        }
        if !self.sync_std_m.is_finite() || self.sync_std_m < 0.0 {
            return Err(Error::invalid(format!(
                "sync_std_m must be non-negative, got {}",
                self.sync_std_m
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

/// The private random stream of one (test point, epoch) pair.
///
/// The stream-splitting rule: the ChaCha12 key is the little-endian
/// concatenation `[master_seed, tp_index, epoch, 0]` of four u64 words.
/// Distinct pairs get distinct keys, so their streams are independent and
/// stable no matter which other trials run.
pub fn epoch_rng(master_seed: u64, tp_index: u64, epoch: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&tp_index.to_le_bytes());
    key[16..24].copy_from_slice(&epoch.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Synthesizes one epoch of range measurements:
/// `t_k = ‖p_k − x‖ + τ + γ_k + n_k + s_k` with `γ_k` from the locator's
/// bias mixture, `n_k ~ N(0, σ²)`, and `s_k ~ N(0, η²)`.
///
/// The synchronization normal is drawn even when `sync_std_m` is zero, so
/// sweeps over η share all other randomness (common random numbers).
pub fn synthesize_toa<R: Rng + ?Sized>(
    scene: &Scene,
    x: &Point3,
    transmit_offset_m: f64,
    sync_std_m: f64,
    rng: &mut R,
) -> Vec<ToaMeasurement> {
    scene
        .toa_locators
        .iter()
        .map(|locator| {
            let bias = scene.toa_noise.bias_for(&locator.id).sample(rng);
            let noise: f64 = rng.sample(StandardNormal);
            let sync: f64 = rng.sample(StandardNormal);
            let range = locator.position.distance(x)
                + transmit_offset_m
                + bias
                + noise * scene.toa_noise.sigma2_m2().sqrt()
                + sync * sync_std_m;
            ToaMeasurement::new(locator.id.clone(), range)
        })
        .collect()
}

/// Synthesizes one epoch of direction measurements: per AoA locator, a draw
/// from `vMF(u_b(x), κ_b)` expressed in the locator's frame, carrying κ_b
/// as its concentration override.
pub fn synthesize_aoa<R: Rng + ?Sized>(
    scene: &Scene,
    x: &Point3,
    rng: &mut R,
) -> Result<Vec<AoaMeasurement>> {
    scene
        .aoa_locators
        .iter()
        .map(|locator| {
            let mean = crate::geometry::true_direction(locator, x)?;
            let vmf = VonMisesFisher::new(mean, locator.concentration)?;
            let direction = vmf.sample(rng);
            AoaMeasurement::new(locator.id.clone(), direction)
                .with_concentration(locator.concentration)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Scene files (JSON)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SceneFile {
    world_bounds: WorldBoundsFile,
    toa_locators: Vec<ToaLocatorFile>,
    aoa_locators: Vec<AoaLocatorFile>,
    toa_noise: ToaNoiseFile,
}

#[derive(Serialize, Deserialize)]
struct WorldBoundsFile {
    min_m: [f64; 3],
    max_m: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct ToaLocatorFile {
    id: String,
    pos_m: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct AoaLocatorFile {
    id: String,
    pos_m: [f64; 3],
    yaw_pitch_roll_rad: [f64; 3],
    kappa: f64,
}

#[derive(Serialize, Deserialize)]
struct ToaNoiseFile {
    sigma2_m2: f64,
    bias: BiasFile,
}

/// Either one mixture shared by every locator, or a map keyed by locator id
/// covering all of them.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BiasFile {
    Shared(Vec<BiasComponentFile>),
    PerLocator(BTreeMap<String, Vec<BiasComponentFile>>),
}

#[derive(Serialize, Deserialize)]
struct BiasComponentFile {
    weight: f64,
    mean_m: f64,
    std_m: f64,
}

fn mixture_from_file(components: &[BiasComponentFile]) -> Result<GaussianMixture> {
    GaussianMixture::new(
        components
            .iter()
            .map(|c| GaussianComponent {
                weight: c.weight,
                mean: c.mean_m,
                std: c.std_m,
            })
            .collect(),
    )
}

fn mixture_to_file(mixture: &GaussianMixture) -> Vec<BiasComponentFile> {
    mixture
        .components()
        .iter()
        .map(|c| BiasComponentFile {
            weight: c.weight,
            mean_m: c.mean,
            std_m: c.std,
        })
        .collect()
}

fn scene_from_file(file: SceneFile) -> Result<Scene> {
    let toa_locators: Vec<ToaLocator> = file
        .toa_locators
        .into_iter()
        .map(|l| ToaLocator::new(l.id, Point3::new(l.pos_m[0], l.pos_m[1], l.pos_m[2])))
        .collect();
    let aoa_locators: Vec<AoaLocator> = file
        .aoa_locators
        .into_iter()
        .map(|l| {
            AoaLocator::new(
                l.id,
                Point3::new(l.pos_m[0], l.pos_m[1], l.pos_m[2]),
                l.yaw_pitch_roll_rad,
                l.kappa,
            )
        })
        .collect::<Result<_>>()?;
    let noise = match &file.toa_noise.bias {
        BiasFile::Shared(components) => {
            ToaNoiseModel::new(file.toa_noise.sigma2_m2, mixture_from_file(components)?)?
        }
        BiasFile::PerLocator(map) => {
            for l in &toa_locators {
                if !map.contains_key(&l.id) {
                    return Err(Error::invalid(format!(
                        "per-locator bias map is missing locator {:?}",
                        l.id
                    )));
                }
            }
            let mut iter = map.iter();
            let (_, first) = iter.next().ok_or_else(|| {
                Error::invalid("per-locator bias map must not be empty")
            })?;
            let mut noise =
                ToaNoiseModel::new(file.toa_noise.sigma2_m2, mixture_from_file(first)?)?;
            for (id, components) in map {
                noise = noise.with_locator_bias(id.clone(), mixture_from_file(components)?);
            }
            noise
        }
    };
    let bounds = Aabb::new(
        Point3::new(
            file.world_bounds.min_m[0],
            file.world_bounds.min_m[1],
            file.world_bounds.min_m[2],
        ),
        Point3::new(
            file.world_bounds.max_m[0],
            file.world_bounds.max_m[1],
            file.world_bounds.max_m[2],
        ),
    )?;
    Scene::new(toa_locators, aoa_locators, noise, bounds)
}

fn scene_to_file(scene: &Scene) -> SceneFile {
    let has_overrides = scene.toa_noise.locator_overrides().next().is_some();
    let bias = if has_overrides {
        BiasFile::PerLocator(
            scene
                .toa_locators
                .iter()
                .map(|l| (l.id.clone(), mixture_to_file(scene.toa_noise.bias_for(&l.id))))
                .collect(),
        )
    } else {
        BiasFile::Shared(mixture_to_file(scene.toa_noise.shared_bias()))
    };
    SceneFile {
        world_bounds: WorldBoundsFile {
            min_m: [scene.bounds.min.x, scene.bounds.min.y, scene.bounds.min.z],
            max_m: [scene.bounds.max.x, scene.bounds.max.y, scene.bounds.max.z],
        },
        toa_locators: scene
            .toa_locators
            .iter()
            .map(|l| ToaLocatorFile {
                id: l.id.clone(),
                pos_m: [l.position.x, l.position.y, l.position.z],
            })
            .collect(),
        aoa_locators: scene
            .aoa_locators
            .iter()
            .map(|l| AoaLocatorFile {
                id: l.id.clone(),
                pos_m: [l.position.x, l.position.y, l.position.z],
                yaw_pitch_roll_rad: l.yaw_pitch_roll_rad(),
                kappa: l.concentration,
            })
            .collect(),
        toa_noise: ToaNoiseFile {
            sigma2_m2: scene.toa_noise.sigma2_m2(),
            bias,
        },
    }
}

/// Parses a scene from its JSON representation.
pub fn scene_from_json(json: &str) -> Result<Scene> {
    let file: SceneFile = serde_json::from_str(json).map_err(|source| Error::Json {
        path: "<inline>".into(),
        source,
    })?;
    scene_from_file(file)
}

/// Renders a scene to its JSON representation (pretty-printed, stable key
/// order, exact float round-trip).
pub fn scene_to_json(scene: &Scene) -> String {
    let mut json =
        serde_json::to_string_pretty(&scene_to_file(scene)).expect("scene serializes");
    json.push('\n');
    json
}

pub fn read_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: SceneFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    scene_from_file(file)
}

pub fn write_scene(path: impl AsRef<Path>, scene: &Scene) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, scene_to_json(scene)).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Test-point files (CSV)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TestPointRow {
    label: String,
    x_m: f64,
    y_m: f64,
    z_m: f64,
}

pub fn read_test_points(path: impl AsRef<Path>) -> Result<Vec<TestPoint>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut points = Vec::new();
    for result in reader.deserialize::<TestPointRow>() {
        let row = result.map_err(|e| csv_error(path, e))?;
        if !(row.x_m.is_finite() && row.y_m.is_finite() && row.z_m.is_finite()) {
            return Err(Error::invalid(format!(
                "test point {:?} has non-finite coordinates",
                row.label
            )));
        }
        points.push(TestPoint {
            label: row.label,
            position: Point3::new(row.x_m, row.y_m, row.z_m),
        });
    }
    if points.is_empty() {
        return Err(Error::invalid(format!(
            "test-point file {} contains no rows",
            path.display()
        )));
    }
    Ok(points)
}

pub fn write_test_points(path: impl AsRef<Path>, points: &[TestPoint]) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for tp in points {
        writer
            .serialize(TestPointRow {
                label: tp.label.clone(),
                x_m: tp.position.x,
                y_m: tp.position.y,
                z_m: tp.position.z,
            })
            .map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Converts a csv crate error into the crate's line-numbered form.
pub(crate) fn csv_error(path: &Path, error: csv::Error) -> Error {
    let line = match error.position() {
        Some(pos) => pos.line(),
        None => 0,
    };
    match error.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = error.into_kind() {
                Error::io(path, io)
            } else {
                unreachable!("kind checked above")
            }
        }
        _ => Error::csv(path, line, error.to_string()),
    }
}
