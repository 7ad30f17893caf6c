//! Behavioral comparisons between the estimators on synthesized data:
//! where the probabilistic range model should pay off, how fusion compares
//! with the single-modality fixes, and the reductions that must agree.

use locfuse::aoa::{aoa_estimate, AoaMeasurement};
use locfuse::geometry::{horizontal_error, true_direction, Aabb, AoaLocator, Point3};
use locfuse::harness::{records_report, run_monte_carlo, Algorithm};
use locfuse::joint::{joint_estimate, SolverConfig};
use locfuse::probability::GaussianMixture;
use locfuse::sim::{
    arena_scene, default_test_points, synthesize_aoa, synthesize_toa, Scene, TrialConfig,
};
use locfuse::toa::{map_toa_estimate, nls_estimate, ToaNoiseModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// The hall geometry with a range-noise model where two of the four
/// locators carry a large known bias: exactly the setting where modeling
/// the bias should beat plain least squares.
fn biased_corner_scene() -> Scene {
    let base = arena_scene();
    let noise = ToaNoiseModel::new(1e-4, GaussianMixture::single(0.0, 0.3).expect("valid bias"))
        .expect("valid noise")
        .with_locator_bias("toa-1", GaussianMixture::single(3.0, 0.3).expect("valid bias"))
        .with_locator_bias("toa-2", GaussianMixture::single(3.0, 0.3).expect("valid bias"));
    Scene::new(base.toa_locators, base.aoa_locators, noise, base.bounds).expect("valid scene")
}

fn random_truth(rng: &mut ChaCha12Rng) -> Point3 {
    Point3::new(
        rng.random_range(1.0..19.0),
        rng.random_range(1.0..9.0),
        rng.random_range(0.5..3.0),
    )
}

#[test]
fn modeled_bias_beats_least_squares_when_locators_disagree() {
    let scene = biased_corner_scene();
    let config = SolverConfig::for_scene(&scene);
    let mut rng = ChaCha12Rng::seed_from_u64(21);

    let trials = 100;
    let mut model_wins = 0;
    for trial in 0..trials {
        let truth = random_truth(&mut rng);
        let tau = rng.random_range(-10.0..10.0);
        let measurements = synthesize_toa(&scene, &truth, tau, 0.0, &mut rng);

        let nls = nls_estimate(&scene.toa_locators, &measurements, &config)
            .unwrap_or_else(|e| panic!("trial {trial}: least squares failed: {e}"));
        let map = map_toa_estimate(&scene.toa_locators, &scene.toa_noise, &measurements, &config)
            .unwrap_or_else(|e| panic!("trial {trial}: probabilistic fit failed: {e}"));

        let nls_err = horizontal_error(&nls.position, &truth);
        let map_err = horizontal_error(&map.position, &truth);
        if map_err <= nls_err + 1e-9 {
            model_wins += 1;
        }
    }
    assert!(
        model_wins >= 80,
        "modeled bias won only {model_wins}/{trials} trials"
    );
}

#[test]
fn fusing_directions_improves_on_ranging_alone() {
    let scene = arena_scene();
    let test_points: Vec<_> = default_test_points().into_iter().step_by(5).collect();
    let config = TrialConfig::new(test_points, 40, 2024).expect("valid config");

    let records = run_monte_carlo(
        &scene,
        &config,
        &[Algorithm::ToaNls, Algorithm::Joint],
        &SolverConfig::for_scene(&scene),
    )
    .expect("simulation runs");
    let (summary, _) = records_report(&records).expect("records summarize");

    let ranging = &summary.algorithms["toa_nls"];
    let fused = &summary.algorithms["joint"];
    assert!(
        fused.p50_m <= ranging.p50_m,
        "fused median {} exceeds ranging median {}",
        fused.p50_m,
        ranging.p50_m
    );
    assert!(
        fused.p90_m <= ranging.p90_m,
        "fused p90 {} exceeds ranging p90 {}",
        fused.p90_m,
        ranging.p90_m
    );
}

#[test]
fn scaling_every_concentration_preserves_the_direction_fix() {
    let scene = arena_scene();
    let config = SolverConfig::for_scene(&scene);
    let truth = Point3::new(7.0, 3.0, 1.2);
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    let measurements = synthesize_aoa(&scene, &truth, &mut rng).expect("synthesis succeeds");

    let base = aoa_estimate(&scene.aoa_locators, &measurements, &config).expect("base fix");
    assert!(base.converged, "base fix did not converge");

    // Multiplying every concentration by a common factor rescales the
    // direction log-likelihood and shifts it by a constant, so the argmax
    // must stay put.
    let rescaled: Vec<AoaMeasurement> = measurements
        .iter()
        .map(|m| {
            let kappa = m.concentration_override.expect("synthesis sets kappa");
            AoaMeasurement::new(m.locator_id.clone(), m.direction)
                .with_concentration(6.0 * kappa)
                .expect("positive kappa")
        })
        .collect();
    let scaled = aoa_estimate(&scene.aoa_locators, &rescaled, &config).expect("scaled fix");
    assert!(scaled.converged, "scaled fix did not converge");

    let shift = (base.position.vector() - scaled.position.vector()).norm();
    assert!(shift < 1e-5, "argmax moved {shift} m under common rescaling");
}

#[test]
fn two_clean_bearings_triangulate_exactly() {
    let locators = vec![
        AoaLocator::new(
            "left",
            Point3::new(0.0, 0.0, 3.0),
            [0.9, 0.35, 0.0],
            50.0,
        )
        .expect("valid locator"),
        AoaLocator::new(
            "right",
            Point3::new(8.0, 0.0, 3.0),
            [2.3, 0.3, 0.0],
            50.0,
        )
        .expect("valid locator"),
    ];
    let truth = Point3::new(3.0, 4.0, 1.0);
    let measurements: Vec<AoaMeasurement> = locators
        .iter()
        .map(|l| {
            let dir = true_direction(l, &truth).expect("target away from locator");
            AoaMeasurement::new(l.id.clone(), dir)
        })
        .collect();

    let bounds = Aabb::new(Point3::new(-2.0, -2.0, -2.0), Point3::new(10.0, 8.0, 5.0))
        .expect("valid bounds");
    let estimate = aoa_estimate(&locators, &measurements, &SolverConfig::new(bounds))
        .expect("clean bearings solve");
    assert!(estimate.converged, "clean-bearing fix did not converge");
    let err = (estimate.position.vector() - truth.vector()).norm();
    assert!(err < 1e-6, "triangulation missed the crossing by {err} m");
}

#[test]
fn single_family_joint_fixes_match_the_dedicated_estimators() {
    let scene = arena_scene();
    let config = SolverConfig::for_scene(&scene);
    let mut rng = ChaCha12Rng::seed_from_u64(41);

    for trial in 0..10 {
        let truth = random_truth(&mut rng);
        let tau = rng.random_range(-10.0..10.0);
        let toa = synthesize_toa(&scene, &truth, tau, 0.0, &mut rng);
        let aoa = synthesize_aoa(&scene, &truth, &mut rng).expect("synthesis succeeds");

        let via_joint = joint_estimate(&scene, &toa, &[], &config).expect("range-only joint");
        let dedicated = map_toa_estimate(&scene.toa_locators, &scene.toa_noise, &toa, &config)
            .expect("range estimator");
        assert_eq!(
            via_joint.position.vector().map(f64::to_bits),
            dedicated.position.vector().map(f64::to_bits),
            "trial {trial}: range-only reduction diverged"
        );

        let via_joint = joint_estimate(&scene, &[], &aoa, &config).expect("direction-only joint");
        let dedicated =
            aoa_estimate(&scene.aoa_locators, &aoa, &config).expect("direction estimator");
        assert_eq!(
            via_joint.position.vector().map(f64::to_bits),
            dedicated.position.vector().map(f64::to_bits),
            "trial {trial}: direction-only reduction diverged"
        );
    }
}
