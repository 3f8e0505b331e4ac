//! Dataset generation and handling.
//!
//! Two generators share one schema: [`generate_twin_dataset`] sweeps the
//! scene's grids through the tracer (the clean replica of the deployment),
//! and [`make_surrogate_real`] replays chosen positions through the same
//! scene with controlled imperfections — per-beam pointing offsets, noisy
//! recorded positions, and log-normal per-beam gain jitter — standing in
//! for a measured deployment.
//!
//! Positions are stored relative to the base station so files carry no
//! absolute-frame baggage. Labels are never stored: they are re-derived as
//! the argmax of the per-beam powers wherever a dataset is loaded.

use std::io::Read;
use std::path::Path;

use ndarray::Array2;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codebook::{beam_powers, build_from_angles, BeamPowerVector, Codebook};
use crate::error::{Error, Result};
use crate::geometry::{discretize_grids, to_polar, Position, SceneSpec};
use crate::raytrace::{synthesize_channel, trace_los};
use crate::seeding::{rng_for, shuffled_indices};

/// One labeled sample: a (base-station-relative) position with the received
/// power of every beam and the derived best-beam label.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    pub position: Position,
    pub beam_powers: BeamPowerVector,
    /// Lowest-index argmax of `beam_powers`.
    pub label: usize,
}

/// A set of samples sharing one codebook size and polar-feature origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Vec<DataPoint>,
    pub codebook_size: usize,
    /// Reference point for polar features. Positions are already
    /// base-station-relative, so this is the zero vector for generated and
    /// loaded datasets; it is kept explicit so features stay well-defined
    /// for re-centered data.
    pub origin: Position,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.label).collect()
    }

    /// Clones the selected points into a new dataset (same codebook size and
    /// origin). Indices may repeat; each must be in range.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let points = indices
            .iter()
            .map(|&i| {
                self.points
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::invalid("indices", format!("index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            points,
            codebook_size: self.codebook_size,
            origin: self.origin,
        })
    }
}

/// Controlled mismatch between the replica and the surrogate deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    /// Std dev (meters) of the Gaussian noise on each recorded coordinate.
    pub position_noise_std: f64,
    /// Additive pointing error per beam, radians; length must equal the
    /// codebook size.
    pub beam_angle_offsets: Vec<f64>,
    /// Std dev (dB) of per-beam log-normal gain jitter.
    pub gain_jitter_db_std: f64,
    /// Base seed for all surrogate draws.
    pub rng_seed: u64,
}

impl PerturbationSpec {
    /// No perturbation at all: the surrogate reproduces the replica exactly.
    pub fn identity(num_beams: usize) -> Self {
        PerturbationSpec {
            position_noise_std: 0.0,
            beam_angle_offsets: vec![0.0; num_beams],
            gain_jitter_db_std: 0.0,
            rng_seed: 0,
        }
    }

    /// Draws `count` independent offsets from N(0, std^2), deterministically
    /// from `seed`.
    pub fn draw_offsets(count: usize, std: f64, seed: u64) -> Vec<f64> {
        let mut rng = rng_for(seed, 0);
        (0..count).map(|_| scaled_normal(&mut rng, std)).collect()
    }

    fn validate(&self, num_beams: usize) -> Result<()> {
        if !(self.position_noise_std >= 0.0) || !self.position_noise_std.is_finite() {
            return Err(Error::invalid(
                "position_noise_std",
                "must be finite and non-negative",
            ));
        }
        if !(self.gain_jitter_db_std >= 0.0) || !self.gain_jitter_db_std.is_finite() {
            return Err(Error::invalid(
                "gain_jitter_db_std",
                "must be finite and non-negative",
            ));
        }
        if self.beam_angle_offsets.len() != num_beams {
            return Err(Error::dimension_mismatch(
                "beam_angle_offsets vs codebook",
                num_beams,
                self.beam_angle_offsets.len(),
            ));
        }
        if let Some(bad) = self.beam_angle_offsets.iter().position(|o| !o.is_finite()) {
            return Err(Error::invalid(
                format!("beam_angle_offsets[{bad}]"),
                "offset must be finite",
            ));
        }
        Ok(())
    }
}

/// Draws std * z with z ~ N(0,1); a zero std short-circuits to exactly 0.0
/// without consuming randomness, so identity specs are bit-exact.
fn scaled_normal(rng: &mut rand_chacha::ChaCha8Rng, std: f64) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        let z: f64 = rand::Rng::sample(rng, StandardNormal);
        std * z
    }
}

/// Sweeps every grid point of `scene` through the tracer and scores
/// `codebook` on the resulting channels.
///
/// Grid points coinciding with the base station are skipped with a warning.
/// Stored positions are relative to the base station.
pub fn generate_twin_dataset(scene: &SceneSpec, codebook: &Codebook) -> Result<Dataset> {
    scene.validate()?;
    if codebook.num_elements() != scene.array.num_elements {
        return Err(Error::dimension_mismatch(
            "codebook vs array",
            scene.array.num_elements,
            codebook.num_elements(),
        ));
    }
    let mut points = Vec::new();
    let mut skipped = 0usize;
    for world in discretize_grids(scene) {
        if world == scene.bs_position {
            skipped += 1;
            continue;
        }
        let paths = trace_los(scene, world)?;
        let h = synthesize_channel(&paths, &scene.array)?;
        let powers = beam_powers(&h, codebook)?;
        let label = powers.argmax();
        points.push(DataPoint {
            position: Position::new(world.x - scene.bs_position.x, world.y - scene.bs_position.y),
            beam_powers: powers,
            label,
        });
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} grid point(s) coinciding with the base station");
    }
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset {
        points,
        codebook_size: codebook.num_beams(),
        origin: Position::ZERO,
    })
}

/// Replays `sample_positions` (world frame) through the scene with the
/// perturbations in `spec` applied.
///
/// The deployment's actual beams are the true codebook's angles shifted by
/// the per-beam offsets. Beam powers additionally get independent log-normal
/// gain jitter; labels are derived after jitter. Recorded positions carry
/// Gaussian noise but physics (channel, powers) always uses the true
/// position. Each sample draws from its own `(rng_seed, index)` stream, so
/// results do not depend on traversal order: draw order per point is dx, dy,
/// then one jitter per beam.
pub fn make_surrogate_real(
    scene: &SceneSpec,
    true_codebook: &Codebook,
    spec: &PerturbationSpec,
    sample_positions: &[Position],
) -> Result<Dataset> {
    scene.validate()?;
    if true_codebook.num_elements() != scene.array.num_elements {
        return Err(Error::dimension_mismatch(
            "codebook vs array",
            scene.array.num_elements,
            true_codebook.num_elements(),
        ));
    }
    spec.validate(true_codebook.num_beams())?;
    let deployed_angles: Vec<f64> = true_codebook
        .angles
        .iter()
        .zip(&spec.beam_angle_offsets)
        .map(|(a, o)| a + o)
        .collect();
    let mut deployed = build_from_angles(&deployed_angles, &scene.array)?;
    deployed.kind = true_codebook.kind;

    let mut points = Vec::new();
    let mut skipped = 0usize;
    for (index, &world) in sample_positions.iter().enumerate() {
        if world == scene.bs_position {
            skipped += 1;
            continue;
        }
        let mut rng = rng_for(spec.rng_seed, index as u64);
        let dx = scaled_normal(&mut rng, spec.position_noise_std);
        let dy = scaled_normal(&mut rng, spec.position_noise_std);

        let h = synthesize_channel(&trace_los(scene, world)?, &scene.array)?;
        let mut powers = beam_powers(&h, &deployed)?;
        for p in &mut powers.powers {
            let jitter_db = scaled_normal(&mut rng, spec.gain_jitter_db_std);
            *p *= 10f64.powf(jitter_db / 10.0);
        }
        let label = powers.argmax();
        points.push(DataPoint {
            position: Position::new(
                world.x + dx - scene.bs_position.x,
                world.y + dy - scene.bs_position.y,
            ),
            beam_powers: powers,
            label,
        });
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} sample position(s) coinciding with the base station");
    }
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset {
        points,
        codebook_size: true_codebook.num_beams(),
        origin: Position::ZERO,
    })
}

/// Serializes to the `x,y,p_0,...,p_{Q-1}` CSV schema. Coordinates use
/// shortest round-trip decimal form; powers use exponent form. Both parse
/// back to bit-identical values.
pub fn csv_bytes(dataset: &Dataset) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["x".to_string(), "y".to_string()];
    header.extend((0..dataset.codebook_size).map(|q| format!("p_{q}")));
    writer.write_record(&header)?;
    for point in &dataset.points {
        let mut record = Vec::with_capacity(dataset.codebook_size + 2);
        record.push(format!("{}", point.position.x - dataset.origin.x));
        record.push(format!("{}", point.position.y - dataset.origin.y));
        record.extend(point.beam_powers.powers.iter().map(|p| format!("{p:e}")));
        writer.write_record(&record)?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::invalid("csv", e.to_string()))
}

/// Writes the CSV schema to `path`.
pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, csv_bytes(dataset)?)?;
    Ok(())
}

/// Loads a dataset from CSV, inferring the codebook size from the header
/// and re-deriving labels. Schema violations carry 1-based line numbers.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    parse_csv(std::fs::File::open(path)?)
}

/// [`load_csv`] plus a check that the file carries exactly `expected_beams`
/// power columns.
pub fn load_csv_expecting(path: &Path, expected_beams: usize) -> Result<Dataset> {
    let dataset = load_csv(path)?;
    if dataset.codebook_size != expected_beams {
        return Err(Error::CsvSchema {
            line: 1,
            message: format!(
                "expected {expected_beams} beam power columns, found {}",
                dataset.codebook_size
            ),
        });
    }
    Ok(dataset)
}

/// Parses the CSV schema from any reader.
pub fn parse_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => {
            return Err(Error::CsvSchema {
                line: 1,
                message: "file is empty".into(),
            })
        }
        Some(r) => r?,
    };
    if header.len() < 3 || &header[0] != "x" || &header[1] != "y" {
        return Err(Error::CsvSchema {
            line: 1,
            message: "header must start with x,y and carry at least one beam column".into(),
        });
    }
    let num_beams = header.len() - 2;
    for q in 0..num_beams {
        let expected = format!("p_{q}");
        if &header[q + 2] != expected.as_str() {
            return Err(Error::CsvSchema {
                line: 1,
                message: format!(
                    "beam column {} must be named {expected}, found {:?}",
                    q + 2,
                    &header[q + 2]
                ),
            });
        }
    }

    let mut points = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != num_beams + 2 {
            return Err(Error::CsvSchema {
                line,
                message: format!("expected {} columns, found {}", num_beams + 2, record.len()),
            });
        }
        let mut values = Vec::with_capacity(num_beams + 2);
        for (column, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::CsvSchema {
                line,
                message: format!("non-numeric value {field:?} in column {column}"),
            })?;
            if !value.is_finite() {
                return Err(Error::CsvSchema {
                    line,
                    message: format!("non-finite value {field:?} in column {column}"),
                });
            }
            values.push(value);
        }
        let powers = BeamPowerVector {
            powers: values.split_off(2),
        };
        let label = powers.argmax();
        points.push(DataPoint {
            position: Position::new(values[0], values[1]),
            beam_powers: powers,
            label,
        });
    }
    if points.is_empty() {
        return Err(Error::CsvSchema {
            line: 1,
            message: "file carries a header but no data rows".into(),
        });
    }
    Ok(Dataset {
        points,
        codebook_size: num_beams,
        origin: Position::ZERO,
    })
}

/// Scale factors that map positions into the unit box, fitted on training
/// data only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    /// Largest |x| or |y| seen, relative to the dataset origin.
    pub max_abs_xy: f64,
    /// Largest distance from the origin.
    pub max_distance: f64,
}

/// Fits [`NormStats`] over a dataset's positions. Errors when the dataset is
/// empty or every position coincides with the origin (nothing to scale by).
pub fn fit_norm_stats(dataset: &Dataset) -> Result<NormStats> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut max_abs_xy: f64 = 0.0;
    let mut max_distance: f64 = 0.0;
    for point in &dataset.points {
        let dx = point.position.x - dataset.origin.x;
        let dy = point.position.y - dataset.origin.y;
        max_abs_xy = max_abs_xy.max(dx.abs()).max(dy.abs());
        max_distance = max_distance.max(dx.hypot(dy));
    }
    if max_distance <= 0.0 {
        return Err(Error::DegenerateNormalization(
            "every position coincides with the origin".into(),
        ));
    }
    Ok(NormStats {
        max_abs_xy,
        max_distance,
    })
}

/// Input representation fed to the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Scaled Cartesian plus scaled polar coordinates (4 inputs). This is
    /// the default; the redundancy costs nothing and lets the first layer
    /// pick whichever frame separates beams best.
    CartesianPolar,
    /// Scaled Cartesian only (2 inputs).
    Cartesian,
    /// Scaled polar only (2 inputs).
    Polar,
}

impl FeatureMode {
    pub fn dim(self) -> usize {
        match self {
            FeatureMode::CartesianPolar => 4,
            FeatureMode::Cartesian | FeatureMode::Polar => 2,
        }
    }

    /// Features for one position under this mode.
    pub fn features(self, position: Position, stats: &NormStats, origin: Position) -> Vec<f64> {
        let full = featurize(position, stats, origin);
        match self {
            FeatureMode::CartesianPolar => full.to_vec(),
            FeatureMode::Cartesian => full[..2].to_vec(),
            FeatureMode::Polar => full[2..].to_vec(),
        }
    }
}

/// Full 4-dimensional feature vector
/// `[x / max_abs_xy, y / max_abs_xy, d / max_distance, azimuth / pi]`
/// with `(d, azimuth)` polar about `origin`. The origin itself maps to all
/// zeros.
pub fn featurize(position: Position, stats: &NormStats, origin: Position) -> [f64; 4] {
    let x = position.x - origin.x;
    let y = position.y - origin.y;
    let (distance, azimuth) = to_polar(position, origin);
    [
        x / stats.max_abs_xy,
        y / stats.max_abs_xy,
        distance / stats.max_distance,
        azimuth / std::f64::consts::PI,
    ]
}

/// Stacks features for every point (dataset order) into an `n x dim` matrix.
pub fn feature_matrix(dataset: &Dataset, stats: &NormStats, mode: FeatureMode) -> Array2<f64> {
    let mut matrix = Array2::zeros((dataset.len(), mode.dim()));
    for (i, point) in dataset.points.iter().enumerate() {
        let f = mode.features(point.position, stats, dataset.origin);
        for (j, v) in f.iter().enumerate() {
            matrix[(i, j)] = *v;
        }
    }
    matrix
}

/// Splits into train/test by a seeded shuffle: the first
/// `floor(n * train_fraction)` shuffled points train, the rest test. Errors
/// if either side would be empty or the fraction is outside (0, 1).
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(
            "train_fraction",
            "must lie strictly between 0 and 1",
        ));
    }
    let n = dataset.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let order = shuffled_indices(n, seed);
    let n_train = (n as f64 * train_fraction).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::invalid(
            "train_fraction",
            format!("split of {n} points leaves an empty side"),
        ));
    }
    Ok((
        dataset.subset(&order[..n_train])?,
        dataset.subset(&order[n_train..])?,
    ))
}
