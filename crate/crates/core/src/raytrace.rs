//! Line-of-sight path tracing and narrowband channel synthesis.
//!
//! The scene model has no blockers or reflectors, so tracing yields exactly
//! one free-space path per user. A path carries complex gain (amplitude and
//! phase), propagation delay, and departure/arrival angles; synthesis folds
//! a path list into the narrowband channel vector seen by the base-station
//! array.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{aoa_at_bs, wrap_angle, ArrayConfig, Position, SceneSpec};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One propagation path between base station and user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    /// Linear amplitude of the complex gain.
    pub gain_amplitude: f64,
    /// Phase of the complex gain, radians in (-pi, pi].
    pub gain_phase: f64,
    /// Propagation delay in seconds.
    pub delay: f64,
    /// Angle of departure at the base station, radians relative to boresight.
    pub aod: f64,
    /// Angle of arrival, radians relative to boresight. Equal to `aod` for a
    /// direct path in this planar model.
    pub aoa: f64,
}

impl PathComponent {
    /// Complex gain `amplitude * exp(j*phase)`.
    pub fn gain(&self) -> Complex64 {
        Complex64::from_polar(self.gain_amplitude, self.gain_phase)
    }
}

/// Complex channel (or beamforming) vector over the array elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub entries: Vec<Complex64>,
}

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Inner product `sum_n conj(self[n]) * other[n]`.
    pub fn inner(&self, other: &ChannelVector) -> Result<Complex64> {
        if self.len() != other.len() {
            return Err(Error::dimension_mismatch(
                "inner product",
                self.len(),
                other.len(),
            ));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Traces the direct path from the base station to a user at `point`.
///
/// Free-space narrowband model at distance `d` and wavelength `lambda`:
/// amplitude `lambda / (4*pi*d)`, phase `-2*pi*d/lambda` (wrapped), delay
/// `d / c`. Returns the single-element path list, or an error if the user
/// coincides with the base station.
pub fn trace_los(scene: &SceneSpec, point: Position) -> Result<Vec<PathComponent>> {
    let aoa = aoa_at_bs(point, scene)?;
    let distance = point.distance_to(scene.bs_position);
    let wavelength = SPEED_OF_LIGHT / scene.carrier_frequency;
    Ok(vec![PathComponent {
        gain_amplitude: wavelength / (4.0 * PI * distance),
        gain_phase: wrap_angle(-2.0 * PI * distance / wavelength),
        delay: distance / SPEED_OF_LIGHT,
        aod: aoa,
        aoa,
    }])
}

/// Unit-amplitude ULA steering vector toward `theta` (radians off
/// boresight): entry `n` is `exp(j * 2*pi * spacing * n * sin(theta))` with
/// spacing in wavelength fractions.
pub fn steering_vector(theta: f64, array: &ArrayConfig) -> ChannelVector {
    let phase_step = 2.0 * PI * array.element_spacing * theta.sin();
    let entries = (0..array.num_elements)
        .map(|n| Complex64::from_polar(1.0, phase_step * n as f64))
        .collect();
    ChannelVector { entries }
}

/// Folds path components into the narrowband channel vector
/// `h = sum_p gain_p * pattern(aod_p) * pattern(aoa_p) * a(aoa_p)`.
///
/// Paths are accumulated in list order so results are bit-reproducible.
/// Errors on an empty path list.
pub fn synthesize_channel(paths: &[PathComponent], array: &ArrayConfig) -> Result<ChannelVector> {
    if paths.is_empty() {
        return Err(Error::NoPaths);
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); array.num_elements];
    for path in paths {
        let pattern = array.element_pattern.gain(path.aod) * array.element_pattern.gain(path.aoa);
        let gain = path.gain() * pattern;
        let steering = steering_vector(path.aoa, array);
        for (acc, s) in entries.iter_mut().zip(&steering.entries) {
            *acc += gain * s;
        }
    }
    Ok(ChannelVector { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UeGridRect;
    use approx::assert_relative_eq;

    fn test_scene() -> SceneSpec {
        SceneSpec {
            bs_position: Position::ZERO,
            array: ArrayConfig::new(16),
            grids: vec![UeGridRect::new(Position::new(1.0, 0.0), 1.0, 1.0, 0.1)],
            carrier_frequency: 60e9,
        }
    }

    #[test]
    fn amplitude_is_one_at_quarter_wavelength_over_pi() {
        let scene = test_scene();
        let wavelength = SPEED_OF_LIGHT / scene.carrier_frequency;
        let d = wavelength / (4.0 * PI);
        let paths = trace_los(&scene, Position::new(d, 0.0)).unwrap();
        assert_eq!(paths.len(), 1);
        assert_relative_eq!(paths[0].gain_amplitude, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn doubling_distance_halves_amplitude() {
        let scene = test_scene();
        let near = trace_los(&scene, Position::new(7.0, 0.0)).unwrap()[0];
        let far = trace_los(&scene, Position::new(14.0, 0.0)).unwrap()[0];
        assert_relative_eq!(near.gain_amplitude / far.gain_amplitude, 2.0, max_relative = 1e-12);
        let drop_db = 20.0 * (near.gain_amplitude / far.gain_amplitude).log10();
        assert_relative_eq!(drop_db, 6.0205999132796239, epsilon = 1e-10);
    }

    #[test]
    fn delay_is_distance_over_c() {
        let scene = test_scene();
        let paths = trace_los(&scene, Position::new(10.0, 0.0)).unwrap();
        assert_relative_eq!(paths[0].delay, 10.0 / SPEED_OF_LIGHT, max_relative = 1e-15);
        // 10 m of free space is about 33.356 ns.
        assert!((paths[0].delay - 33.356e-9).abs() < 1e-12);
    }

    #[test]
    fn phase_matches_wrapped_electrical_length() {
        let scene = test_scene();
        let wavelength = SPEED_OF_LIGHT / scene.carrier_frequency;
        let d = 3.7;
        let paths = trace_los(&scene, Position::new(d, 0.0)).unwrap();
        let expected = wrap_angle(-2.0 * PI * d / wavelength);
        assert_eq!(paths[0].gain_phase, expected);
        assert!(paths[0].gain_phase > -PI && paths[0].gain_phase <= PI);
    }

    #[test]
    fn direct_path_angles_agree_and_point_at_user() {
        let scene = test_scene();
        let user = Position::new(3.0, 3.0);
        let path = trace_los(&scene, user).unwrap()[0];
        assert_eq!(path.aod, path.aoa);
        assert_relative_eq!(path.aoa, PI / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn tracing_the_bs_position_errors() {
        let scene = test_scene();
        assert!(matches!(
            trace_los(&scene, scene.bs_position),
            Err(Error::CoincidentWithBs)
        ));
    }

    #[test]
    fn steering_at_broadside_is_all_ones() {
        let array = ArrayConfig::new(8);
        let v = steering_vector(0.0, &array);
        assert_eq!(v.len(), 8);
        for e in &v.entries {
            assert_eq!(*e, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn steering_at_endfire_alternates_sign() {
        // Half-wavelength spacing at theta = pi/2: phase step pi per element.
        let array = ArrayConfig::new(2);
        let v = steering_vector(PI / 2.0, &array);
        assert_eq!(v.entries[0], Complex64::new(1.0, 0.0));
        assert_relative_eq!(v.entries[1].re, -1.0, epsilon = 1e-12);
        assert!(v.entries[1].im.abs() < 1e-12);
    }

    #[test]
    fn steering_norm_is_sqrt_n() {
        let array = ArrayConfig::new(16);
        for theta in [-1.2, -0.3, 0.0, 0.7, 1.5] {
            assert_relative_eq!(steering_vector(theta, &array).norm(), 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_path_channel_is_scaled_steering() {
        let array = ArrayConfig::new(16);
        let path = PathComponent {
            gain_amplitude: 2.5e-4,
            gain_phase: 0.0,
            delay: 1e-8,
            aod: 0.3,
            aoa: 0.3,
        };
        let h = synthesize_channel(&[path], &array).unwrap();
        let steering = steering_vector(0.3, &array);
        for (he, se) in h.entries.iter().zip(&steering.entries) {
            assert_relative_eq!(he.re, 2.5e-4 * se.re, epsilon = 1e-16);
            assert_relative_eq!(he.im, 2.5e-4 * se.im, epsilon = 1e-16);
        }
        assert_relative_eq!(h.norm(), 2.5e-4 * 4.0, max_relative = 1e-12);
    }

    #[test]
    fn opposite_phase_paths_cancel() {
        let array = ArrayConfig::new(4);
        let mk = |phase: f64| PathComponent {
            gain_amplitude: 1e-3,
            gain_phase: phase,
            delay: 0.0,
            aod: 0.4,
            aoa: 0.4,
        };
        let h = synthesize_channel(&[mk(0.0), mk(PI)], &array).unwrap();
        assert!(h.norm() < 1e-3 * 1e-12 * 4.0 + 1e-18);
    }

    #[test]
    fn two_path_norm_matches_independent_formula() {
        // |h|^2 for two equal-angle paths is N * |g1 + g2|^2; compute the
        // right side from scratch.
        let array = ArrayConfig::new(16);
        let p1 = PathComponent {
            gain_amplitude: 2e-3,
            gain_phase: 0.7,
            delay: 0.0,
            aod: -0.2,
            aoa: -0.2,
        };
        let p2 = PathComponent {
            gain_amplitude: 1e-3,
            gain_phase: -1.9,
            delay: 0.0,
            aod: -0.2,
            aoa: -0.2,
        };
        let h = synthesize_channel(&[p1, p2], &array).unwrap();
        let combined = Complex64::from_polar(2e-3, 0.7) + Complex64::from_polar(1e-3, -1.9);
        assert_relative_eq!(h.norm(), 4.0 * combined.norm(), max_relative = 1e-12);
    }

    #[test]
    fn empty_path_list_errors() {
        let array = ArrayConfig::new(4);
        assert!(matches!(
            synthesize_channel(&[], &array),
            Err(Error::NoPaths)
        ));
    }

    #[test]
    fn traced_channel_norm_follows_inverse_distance() {
        let scene = test_scene();
        let h1 = synthesize_channel(&trace_los(&scene, Position::new(5.0, 0.0)).unwrap(), &scene.array).unwrap();
        let h2 = synthesize_channel(&trace_los(&scene, Position::new(10.0, 0.0)).unwrap(), &scene.array).unwrap();
        assert_relative_eq!(h1.norm() / h2.norm(), 2.0, max_relative = 1e-12);
    }
}
