//! Top-k evaluation and the nearest-neighbor lookup baseline.
//!
//! Every predictor is reduced to the same interface — an ordered beam
//! ranking per test position — and scored two ways: top-k accuracy (did the
//! true best beam appear among the first k?) and top-k relative receive
//! power (how much of the best beam's power did the best-of-k capture,
//! averaged over test points).

use serde::{Deserialize, Serialize};

use crate::codebook::BeamPowerVector;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::Position;

/// Metrics for k = 1..=k_max over one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub num_test_points: usize,
    /// `topk_accuracy[k-1]` is the top-k accuracy.
    pub topk_accuracy: Vec<f64>,
    /// `topk_relative_power[k-1]` is the mean best-of-k power ratio.
    pub topk_relative_power: Vec<f64>,
}

impl EvalReport {
    pub fn k_max(&self) -> usize {
        self.topk_accuracy.len()
    }

    pub fn accuracy_at(&self, k: usize) -> Option<f64> {
        self.topk_accuracy.get(k.checked_sub(1)?).copied()
    }

    pub fn relative_power_at(&self, k: usize) -> Option<f64> {
        self.topk_relative_power.get(k.checked_sub(1)?).copied()
    }

    /// `k,accuracy,relative_power` rows, one per k.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,accuracy,relative_power\n");
        for (i, (acc, rel)) in self
            .topk_accuracy
            .iter()
            .zip(&self.topk_relative_power)
            .enumerate()
        {
            out.push_str(&format!("{},{acc},{rel}\n", i + 1));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Result of a nearest-neighbor lookup into a twin dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct NnPrediction {
    /// Index of the nearest twin point.
    pub twin_index: usize,
    /// That point's best-beam label.
    pub label: usize,
    /// The twin point's full beam ranking (descending power, index ties
    /// ascending); entry 0 equals `label`.
    pub ranking: Vec<usize>,
}

/// Finds the twin point closest to `query` (squared Euclidean distance,
/// exact linear scan; distance ties keep the lowest index) and returns its
/// label and beam ranking.
pub fn nn_lookup(twin: &Dataset, query: Position) -> Result<NnPrediction> {
    if twin.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut best_index = 0usize;
    let mut best_d2 = f64::INFINITY;
    for (i, point) in twin.points.iter().enumerate() {
        let dx = point.position.x - query.x;
        let dy = point.position.y - query.y;
        let d2 = dx * dx + dy * dy;
        if d2 < best_d2 {
            best_d2 = d2;
            best_index = i;
        }
    }
    let point = &twin.points[best_index];
    Ok(NnPrediction {
        twin_index: best_index,
        label: point.label,
        ranking: point.beam_powers.ranking(),
    })
}

/// Fraction of points whose true label appears in the first `k` entries of
/// their predicted ranking. Every ranking must carry at least `k` entries.
pub fn topk_accuracy(predictions: &[Vec<usize>], truths: &[usize], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k", "k must be at least 1"));
    }
    if predictions.len() != truths.len() {
        return Err(Error::dimension_mismatch(
            "predictions vs truths",
            truths.len(),
            predictions.len(),
        ));
    }
    if predictions.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut hits = 0usize;
    for (i, (ranking, &truth)) in predictions.iter().zip(truths).enumerate() {
        if ranking.len() < k {
            return Err(Error::invalid(
                format!("predictions[{i}]"),
                format!("ranking of length {} cannot serve k={k}", ranking.len()),
            ));
        }
        if ranking[..k].contains(&truth) {
            hits += 1;
        }
    }
    Ok(hits as f64 / truths.len() as f64)
}

/// Mean over test points of `max(power over first k predicted beams) /
/// max(power over all beams)`.
///
/// Points whose peak power is not strictly positive carry no usable signal
/// and are skipped (with a warning); if every point is skipped the metric is
/// undefined and an error is returned.
pub fn topk_relative_power(
    predictions: &[Vec<usize>],
    truth_powers: &[BeamPowerVector],
    k: usize,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k", "k must be at least 1"));
    }
    if predictions.len() != truth_powers.len() {
        return Err(Error::dimension_mismatch(
            "predictions vs truth powers",
            truth_powers.len(),
            predictions.len(),
        ));
    }
    if predictions.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sum = 0.0;
    let mut included = 0usize;
    let mut skipped = 0usize;
    for (i, (ranking, powers)) in predictions.iter().zip(truth_powers).enumerate() {
        if ranking.len() < k {
            return Err(Error::invalid(
                format!("predictions[{i}]"),
                format!("ranking of length {} cannot serve k={k}", ranking.len()),
            ));
        }
        let peak = powers.powers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(peak > 0.0) {
            skipped += 1;
            continue;
        }
        let mut best = 0.0f64;
        for &beam in &ranking[..k] {
            let p = *powers.powers.get(beam).ok_or_else(|| {
                Error::invalid(
                    format!("predictions[{i}]"),
                    format!("beam {beam} out of range for {} beams", powers.len()),
                )
            })?;
            best = best.max(p);
        }
        sum += best / peak;
        included += 1;
    }
    if skipped > 0 {
        log::warn!("top-k relative power skipped {skipped} zero-power test point(s)");
    }
    if included == 0 {
        return Err(Error::invalid(
            "truth_powers",
            "no test point has positive beam power",
        ));
    }
    Ok(sum / included as f64)
}

/// Runs `predict` over every test position and scores it for k = 1..=k_max.
///
/// `predict` must return a beam ranking with at least `k_max` entries for
/// each queried position.
pub fn evaluate_predictor<F>(mut predict: F, test: &Dataset, k_max: usize) -> Result<EvalReport>
where
    F: FnMut(Position) -> Result<Vec<usize>>,
{
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if k_max == 0 || k_max > test.codebook_size {
        return Err(Error::invalid(
            "k_max",
            format!(
                "k_max={k_max} out of range for {} beams",
                test.codebook_size
            ),
        ));
    }
    let predictions: Vec<Vec<usize>> = test
        .points
        .iter()
        .map(|p| predict(p.position))
        .collect::<Result<_>>()?;
    let truths = test.labels();
    let truth_powers: Vec<BeamPowerVector> =
        test.points.iter().map(|p| p.beam_powers.clone()).collect();
    let mut topk_acc = Vec::with_capacity(k_max);
    let mut topk_rel = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        topk_acc.push(topk_accuracy(&predictions, &truths, k)?);
        topk_rel.push(topk_relative_power(&predictions, &truth_powers, k)?);
    }
    Ok(EvalReport {
        num_test_points: test.len(),
        topk_accuracy: topk_acc,
        topk_relative_power: topk_rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::build_uniform_fov;
    use crate::dataset::{generate_twin_dataset, make_surrogate_real, PerturbationSpec};
    use crate::geometry::{discretize_grids, ArrayConfig, SceneSpec, UeGridRect};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn toy_scene() -> SceneSpec {
        SceneSpec {
            bs_position: Position::ZERO,
            array: ArrayConfig::new(16).with_boresight(PI / 2.0),
            grids: vec![UeGridRect::new(Position::new(-4.0, 6.0), 8.0, 1.0, 0.5)],
            carrier_frequency: 60e9,
        }
    }

    fn toy_twin() -> Dataset {
        let scene = toy_scene();
        let cb = build_uniform_fov(16, -PI / 3.0, PI / 3.0, &scene.array).unwrap();
        generate_twin_dataset(&scene, &cb).unwrap()
    }

    #[test]
    fn nn_finds_exact_match() {
        let twin = toy_twin();
        for (i, point) in twin.points.iter().enumerate().step_by(7) {
            let pred = nn_lookup(&twin, point.position).unwrap();
            assert_eq!(pred.twin_index, i);
            assert_eq!(pred.label, point.label);
            assert_eq!(pred.ranking[0], point.label);
            assert_eq!(pred.ranking.len(), 16);
        }
    }

    #[test]
    fn nn_ties_break_to_lowest_index() {
        let twin = toy_twin();
        // Points 0 and 1 are neighbors 0.5 m apart on a row; their midpoint
        // is equidistant.
        let a = twin.points[0].position;
        let b = twin.points[1].position;
        let mid = Position::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
        assert_eq!(nn_lookup(&twin, mid).unwrap().twin_index, 0);
    }

    #[test]
    fn nn_agrees_with_bruteforce_scan() {
        let twin = toy_twin();
        let queries = [
            Position::new(0.3, 6.7),
            Position::new(-3.9, 5.8),
            Position::new(4.2, 7.3),
            Position::new(0.0, 0.0),
        ];
        for q in queries {
            let pred = nn_lookup(&twin, q).unwrap();
            let best = twin
                .points
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    let da = (a.position.x - q.x).powi(2) + (a.position.y - q.y).powi(2);
                    let db = (b.position.x - q.x).powi(2) + (b.position.y - q.y).powi(2);
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap()
                .0;
            assert_eq!(pred.twin_index, best);
        }
    }

    #[test]
    fn nn_on_empty_twin_errors() {
        let twin = Dataset {
            points: vec![],
            codebook_size: 16,
            origin: Position::ZERO,
        };
        assert!(matches!(
            nn_lookup(&twin, Position::ZERO),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn accuracy_on_hand_toy_is_exact() {
        // Truth hit at rank 1, rank 3, and never: accuracies 1/3, 1/3, 2/3.
        let predictions = vec![vec![0, 1, 2], vec![4, 1, 2], vec![0, 1, 2]];
        let truths = vec![0, 2, 3];
        assert_relative_eq!(
            topk_accuracy(&predictions, &truths, 1).unwrap(),
            1.0 / 3.0
        );
        assert_relative_eq!(
            topk_accuracy(&predictions, &truths, 2).unwrap(),
            1.0 / 3.0
        );
        assert_relative_eq!(
            topk_accuracy(&predictions, &truths, 3).unwrap(),
            2.0 / 3.0
        );
    }

    #[test]
    fn relative_power_on_hand_toy_is_exact() {
        // Point 1: predicted beam 1 captures 1 of peak 4. Point 2: predicted
        // beam 1 captures its peak 3. Mean = (0.25 + 1.0) / 2.
        let predictions = vec![vec![1], vec![1]];
        let powers = vec![
            BeamPowerVector {
                powers: vec![4.0, 1.0],
            },
            BeamPowerVector {
                powers: vec![1.0, 3.0],
            },
        ];
        assert_eq!(
            topk_relative_power(&predictions, &powers, 1).unwrap(),
            0.625
        );
    }

    #[test]
    fn perfect_predictions_score_one_everywhere() {
        let twin = toy_twin();
        let predictions: Vec<Vec<usize>> =
            twin.points.iter().map(|p| p.beam_powers.ranking()).collect();
        let truths = twin.labels();
        let powers: Vec<BeamPowerVector> =
            twin.points.iter().map(|p| p.beam_powers.clone()).collect();
        assert_eq!(topk_accuracy(&predictions, &truths, 1).unwrap(), 1.0);
        assert_eq!(topk_relative_power(&predictions, &powers, 1).unwrap(), 1.0);
        // Full-length rankings always contain the truth.
        assert_eq!(topk_accuracy(&predictions, &truths, 16).unwrap(), 1.0);
        assert_eq!(topk_relative_power(&predictions, &powers, 16).unwrap(), 1.0);
    }

    #[test]
    fn metrics_are_monotone_in_k() {
        let twin = toy_twin();
        // A deliberately wrong-ish predictor: always the reversed ranking of
        // the twin point two rows over.
        let predictions: Vec<Vec<usize>> = twin
            .points
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let j = (i + 5) % twin.len();
                let mut r = twin.points[j].beam_powers.ranking();
                r.reverse();
                r
            })
            .collect();
        let truths = twin.labels();
        let powers: Vec<BeamPowerVector> =
            twin.points.iter().map(|p| p.beam_powers.clone()).collect();
        let mut prev_acc = 0.0;
        let mut prev_rel = 0.0;
        for k in 1..=16 {
            let acc = topk_accuracy(&predictions, &truths, k).unwrap();
            let rel = topk_relative_power(&predictions, &powers, k).unwrap();
            assert!(acc >= prev_acc);
            assert!(rel >= prev_rel - 1e-15);
            assert!((0.0..=1.0).contains(&acc));
            assert!((0.0..=1.0 + 1e-12).contains(&rel));
            prev_acc = acc;
            prev_rel = rel;
        }
        assert_eq!(prev_acc, 1.0);
        assert_relative_eq!(prev_rel, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_power_points_are_skipped() {
        let predictions = vec![vec![0], vec![0]];
        let powers = vec![
            BeamPowerVector {
                powers: vec![0.0, 0.0],
            },
            BeamPowerVector {
                powers: vec![2.0, 1.0],
            },
        ];
        // Only the second point counts; its predicted beam captures its peak.
        assert_eq!(topk_relative_power(&predictions, &powers, 1).unwrap(), 1.0);
        let all_zero = vec![BeamPowerVector {
            powers: vec![0.0, 0.0],
        }];
        assert!(topk_relative_power(&[vec![0]], &all_zero, 1).is_err());
    }

    #[test]
    fn metric_input_validation() {
        let predictions = vec![vec![0, 1]];
        assert!(topk_accuracy(&predictions, &[0], 0).is_err());
        assert!(topk_accuracy(&predictions, &[0, 1], 1).is_err());
        assert!(topk_accuracy(&predictions, &[0], 3).is_err());
        assert!(topk_accuracy(&[], &[], 1).is_err());
        let powers = vec![BeamPowerVector {
            powers: vec![1.0, 2.0],
        }];
        assert!(topk_relative_power(&predictions, &powers, 3).is_err());
        assert!(topk_relative_power(&[vec![7]], &powers, 1).is_err());
    }

    #[test]
    fn evaluating_twin_against_itself_is_perfect() {
        let twin = toy_twin();
        let report = evaluate_predictor(
            |pos| Ok(nn_lookup(&twin, pos)?.ranking),
            &twin,
            5,
        )
        .unwrap();
        assert_eq!(report.num_test_points, twin.len());
        assert_eq!(report.k_max(), 5);
        for k in 1..=5 {
            assert_eq!(report.accuracy_at(k), Some(1.0));
            assert_eq!(report.relative_power_at(k), Some(1.0));
        }
    }

    #[test]
    fn unperturbed_surrogate_scores_one_under_twin_lookup() {
        let scene = toy_scene();
        let cb = build_uniform_fov(16, -PI / 3.0, PI / 3.0, &scene.array).unwrap();
        let twin = generate_twin_dataset(&scene, &cb).unwrap();
        let surrogate = make_surrogate_real(
            &scene,
            &cb,
            &PerturbationSpec::identity(16),
            &discretize_grids(&scene),
        )
        .unwrap();
        let report = evaluate_predictor(
            |pos| Ok(nn_lookup(&twin, pos)?.ranking),
            &surrogate,
            3,
        )
        .unwrap();
        assert_eq!(report.topk_accuracy, vec![1.0; 3]);
        assert_eq!(report.topk_relative_power, vec![1.0; 3]);
    }

    #[test]
    fn evaluate_predictor_validates_k_and_rankings() {
        let twin = toy_twin();
        assert!(evaluate_predictor(|_| Ok(vec![0; 16]), &twin, 0).is_err());
        assert!(evaluate_predictor(|_| Ok(vec![0; 16]), &twin, 17).is_err());
        // Rankings shorter than k_max fail inside the metric.
        assert!(evaluate_predictor(|_| Ok(vec![0]), &twin, 2).is_err());
        // Predictor errors propagate.
        assert!(evaluate_predictor(
            |_| Err(Error::invalid("predict", "boom")),
            &twin,
            1
        )
        .is_err());
    }

    #[test]
    fn report_csv_layout_is_stable() {
        let report = EvalReport {
            num_test_points: 2,
            topk_accuracy: vec![0.5, 1.0],
            topk_relative_power: vec![0.625, 1.0],
        };
        assert_eq!(
            report.to_csv(),
            "k,accuracy,relative_power\n1,0.5,0.625\n2,1,1\n"
        );
        let json = report.to_json().unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
