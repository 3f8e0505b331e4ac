//! Cross-module checks: the full geometry -> trace -> synthesize -> codebook
//! chain against a closed-form oracle, plus a miniature end-to-end
//! train/evaluate pass.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twinbeam::codebook::{beam_powers, build_uniform_fov, Codebook};
use twinbeam::dataset::{
    feature_matrix, fit_norm_stats, generate_twin_dataset, split, FeatureMode,
};
use twinbeam::evaluate::evaluate_predictor;
use twinbeam::geometry::{ArrayConfig, Position, SceneSpec, UeGridRect};
use twinbeam::neural::{predict_topk, train, TrainConfig};
use twinbeam::raytrace::{synthesize_channel, trace_los, SPEED_OF_LIGHT};

/// Two streets north of a base station at the origin, boresight +y.
fn street_scene() -> SceneSpec {
    SceneSpec {
        bs_position: Position::ZERO,
        array: ArrayConfig::new(16).with_boresight(PI / 2.0),
        grids: vec![
            UeGridRect::new(Position::new(-15.0, 8.0), 30.0, 1.0, 0.1),
            UeGridRect::new(Position::new(-15.0, 11.0), 30.0, 1.0, 0.1),
        ],
        carrier_frequency: 60e9,
    }
}

fn street_codebook(scene: &SceneSpec) -> Codebook {
    build_uniform_fov(16, -PI / 3.0, PI / 3.0, &scene.array).unwrap()
}

/// Closed-form received power of beam `q` for a single line-of-sight path:
/// amplitude^2 / N times the squared Dirichlet kernel at the beam/user
/// angle difference. Everything here is scalar arithmetic — no channel or
/// codebook code involved.
fn oracle_beam_power(
    user: Position,
    scene: &SceneSpec,
    beam_angle: f64,
    num_elements: usize,
) -> f64 {
    let dx = user.x - scene.bs_position.x;
    let dy = user.y - scene.bs_position.y;
    let distance = (dx * dx + dy * dy).sqrt();
    let wavelength = SPEED_OF_LIGHT / scene.carrier_frequency;
    let amplitude = wavelength / (4.0 * PI * distance);
    let theta = (dy.atan2(dx)) - scene.array.boresight_azimuth;
    // Phase step difference between user and beam directions, at
    // half-wavelength spacing.
    let psi = PI * (theta.sin() - beam_angle.sin());
    let n = num_elements as f64;
    let kernel_sq = if psi.abs() < 1e-12 {
        n * n
    } else {
        ((n * psi / 2.0).sin() / (psi / 2.0).sin()).powi(2)
    };
    amplitude * amplitude * kernel_sq / n
}

#[test]
fn full_chain_matches_closed_form_powers() {
    let scene = street_scene();
    let cb = street_codebook(&scene);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let user = Position::new(rng.random_range(-15.0..15.0), rng.random_range(6.0..14.0));
        let h = synthesize_channel(&trace_los(&scene, user).unwrap(), &scene.array).unwrap();
        let bp = beam_powers(&h, &cb).unwrap();
        // At deep pattern nulls the summed inner product cancels almost
        // completely, so compare at 1e-12 of the aligned-beam power scale
        // (|h|^2 = amplitude^2 * N) rather than of the tiny result itself.
        let scale = h.norm().powi(2);
        for (q, &angle) in cb.angles.iter().enumerate() {
            let expected = oracle_beam_power(user, &scene, angle, 16);
            let tolerance = 1e-12 * expected.max(scale);
            assert!(
                (bp.powers[q] - expected).abs() <= tolerance,
                "user {user:?} beam {q}: {} vs oracle {}",
                bp.powers[q],
                expected
            );
        }
    }
}

#[test]
fn street_twin_has_expected_size_and_geometry() {
    let scene = street_scene();
    let cb = street_codebook(&scene);
    let twin = generate_twin_dataset(&scene, &cb).unwrap();
    // 301 x 11 lattice per street, two streets.
    assert_eq!(twin.len(), 2 * 301 * 11);
    let stats = fit_norm_stats(&twin).unwrap();
    assert!((stats.max_abs_xy - 15.0).abs() < 1e-9);
    assert!((stats.max_distance - (15.0f64.powi(2) + 12.0f64.powi(2)).sqrt()).abs() < 1e-9);
    // Labels sweep a broad range of beams over a 120-degree field of view.
    let labels = twin.labels();
    let distinct: std::collections::BTreeSet<usize> = labels.iter().copied().collect();
    assert!(distinct.len() >= 12, "only {} distinct labels", distinct.len());
}

#[test]
fn oracle_labels_agree_on_sampled_twin_points() {
    let scene = street_scene();
    let cb = street_codebook(&scene);
    let twin = generate_twin_dataset(&scene, &cb).unwrap();
    let world = twinbeam::geometry::discretize_grids(&scene);
    for i in (0..twin.len()).step_by(97) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (q, &angle) in cb.angles.iter().enumerate() {
            let p = oracle_beam_power(world[i], &scene, angle, 16);
            if p > best.1 {
                best = (q, p);
            }
        }
        assert_eq!(twin.points[i].label, best.0, "point {i}");
    }
}

#[test]
fn small_end_to_end_training_beats_chance_on_held_out_points() {
    let scene = street_scene();
    let cb = street_codebook(&scene);
    let twin = generate_twin_dataset(&scene, &cb).unwrap();
    // Work on a subsample to keep this quick.
    let indices = twinbeam::seeding::shuffled_indices(twin.len(), 5);
    let sample = twin.subset(&indices[..400]).unwrap();
    let (train_set, test_set) = split(&sample, 0.8, 6).unwrap();
    let stats = fit_norm_stats(&train_set).unwrap();
    let features = feature_matrix(&train_set, &stats, FeatureMode::CartesianPolar);
    let cfg = TrainConfig {
        epochs: 30,
        ..TrainConfig::training(7)
    };
    let (params, history) = train(None, features.view(), &train_set.labels(), 16, &cfg).unwrap();
    assert!(history[0] > *history.last().unwrap(), "loss did not decrease");
    let report = evaluate_predictor(
        |pos| {
            let f = FeatureMode::CartesianPolar.features(pos, &stats, test_set.origin);
            predict_topk(&params, &f, 16)
        },
        &test_set,
        3,
    )
    .unwrap();
    // Chance is 1/16; a position-aware model on a dense grid does far
    // better even with a short training run.
    assert!(
        report.accuracy_at(1).unwrap() > 0.5,
        "top-1 {:?}",
        report.topk_accuracy
    );
    assert!(report.accuracy_at(3).unwrap() >= report.accuracy_at(1).unwrap());
    assert!(report.relative_power_at(1).unwrap() > 0.5);
}
