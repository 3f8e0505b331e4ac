//! Experiment configuration: a single JSON file describing the scene, the
//! codebook, the real-world mismatch, and every training/evaluation knob.
//!
//! All values at this interface use human units — angles in degrees,
//! distances in meters, frequencies in GHz — and are converted to internal
//! units (radians, Hz) by the consuming commands. Every field has a default,
//! so `{}` is a complete configuration of the reference two-street scenario.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use twinbeam::dataset::FeatureMode;
use twinbeam::geometry::{ArrayFile, ElementPattern, Position, SceneFile, UeGridRect};

/// Top-level experiment description. Unknown fields are rejected so typos
/// fail loudly instead of silently falling back to defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Scene geometry: base station, antenna array, user grids.
    pub scene: SceneFile,
    /// Nominal beam codebook shared by the twin and the deployment.
    pub codebook: CodebookSection,
    /// Twin-vs-real mismatch severity.
    pub perturbation: PerturbationSection,
    /// Surrogate-real sampling and train/test split.
    pub surrogate: SurrogateSection,
    /// From-scratch training recipe (zero-shot, sweep, scratch baseline).
    pub training: TrainingSection,
    /// Fine-tuning recipe applied to zero-shot checkpoints.
    pub finetune: FinetuneSection,
    /// Input representation fed to the classifier.
    pub feature_mode: FeatureMode,
    /// Twin training-set sizes for the learning-curve sweep; counts or "all".
    pub twin_train_sizes: Vec<SizeSpec>,
    /// Real-data budgets for the fine-tuning curve.
    pub finetune_sizes: Vec<usize>,
    /// Experiment seeds; each seed gets its own deployment draw.
    pub seeds: Vec<u64>,
    /// Values of k reported in summary tables (top-k metrics).
    pub report_ks: Vec<usize>,
    /// Where outputs go unless `--out` overrides it.
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scene: default_scene(),
            codebook: CodebookSection::default(),
            perturbation: PerturbationSection::default(),
            surrogate: SurrogateSection::default(),
            training: TrainingSection::default(),
            finetune: FinetuneSection::default(),
            feature_mode: FeatureMode::CartesianPolar,
            twin_train_sizes: vec![
                SizeSpec::Count(10),
                SizeSpec::Count(30),
                SizeSpec::Count(100),
                SizeSpec::Count(300),
                SizeSpec::Count(1000),
                SizeSpec::all(),
            ],
            finetune_sizes: vec![0, 5, 10, 20, 50, 100],
            seeds: vec![1, 2, 3, 4, 5],
            report_ks: vec![1, 2, 3, 4, 5],
            output_dir: None,
        }
    }
}

/// Reference scenario: base station at the origin looking up the +y axis,
/// two 30 m x 1 m streets crossing the field of view at different ranges.
fn default_scene() -> SceneFile {
    SceneFile {
        bs_position: Position::ZERO,
        array: ArrayFile {
            num_elements: 16,
            element_spacing: 0.5,
            boresight_azimuth_deg: 90.0,
            element_pattern: ElementPattern::Isotropic,
        },
        grids: vec![
            UeGridRect::new(Position::new(-15.0, 8.0), 30.0, 1.0, 0.1),
            UeGridRect::new(Position::new(-15.0, 11.0), 30.0, 1.0, 0.1),
        ],
        carrier_frequency_ghz: 60.0,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodebookSection {
    pub num_beams: usize,
    /// Field-of-view edges relative to boresight, degrees.
    pub fov_min_deg: f64,
    pub fov_max_deg: f64,
}

impl Default for CodebookSection {
    fn default() -> Self {
        CodebookSection {
            num_beams: 16,
            fov_min_deg: -60.0,
            fov_max_deg: 60.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSection {
    /// Std dev of the per-beam pointing error, degrees.
    pub beam_angle_offset_std_deg: f64,
    /// Std dev of the recorded-position noise, meters.
    pub position_noise_std_m: f64,
    /// Std dev of the per-beam log-normal gain jitter, dB.
    pub gain_jitter_db_std: f64,
}

impl Default for PerturbationSection {
    /// Calibrated so nearest-neighbor transfer from the twin lands around
    /// 60% top-1 accuracy on the reference scenario: a clearly imperfect
    /// twin that still carries most of the beam structure.
    fn default() -> Self {
        PerturbationSection {
            beam_angle_offset_std_deg: 3.5,
            position_noise_std_m: 0.5,
            gain_jitter_db_std: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurrogateSection {
    /// Spacing of the drive-by sample positions along the grids, meters.
    pub sample_spacing_m: f64,
    /// Fraction of the surrogate-real set available for adaptation; the
    /// remainder is the held-out test split.
    pub train_fraction: f64,
}

impl Default for SurrogateSection {
    fn default() -> Self {
        SurrogateSection {
            sample_spacing_m: 0.5,
            train_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Multiply the learning rate by 0.2 every 20 epochs.
    pub step_decay: bool,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            learning_rate: 1e-2,
            epochs: 80,
            batch_size: 32,
            step_decay: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FinetuneSection {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for FinetuneSection {
    fn default() -> Self {
        FinetuneSection {
            learning_rate: 1e-4,
            epochs: 40,
            batch_size: 8,
        }
    }
}

/// A twin training-set size: an explicit count or the keyword `"all"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeSpec {
    Count(usize),
    Keyword(String),
}

impl SizeSpec {
    pub fn all() -> Self {
        SizeSpec::Keyword("all".to_owned())
    }

    pub fn is_all(&self) -> bool {
        matches!(self, SizeSpec::Keyword(k) if k == "all")
    }

    /// The concrete count for a twin of `twin_len` points. Errors if a count
    /// exceeds the twin size or is zero.
    pub fn resolve(&self, twin_len: usize) -> Result<usize> {
        match self {
            SizeSpec::Count(c) => {
                if *c == 0 {
                    bail!("twin_train_sizes: size must be at least 1");
                }
                if *c > twin_len {
                    bail!("twin_train_sizes: size {c} exceeds twin size {twin_len}");
                }
                Ok(*c)
            }
            SizeSpec::Keyword(_) => Ok(twin_len),
        }
    }
}

impl std::fmt::Display for SizeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SizeSpec::Count(c) => write!(f, "{c}"),
            SizeSpec::Keyword(k) => write!(f, "{k}"),
        }
    }
}

impl ExperimentConfig {
    /// Reads and validates a config file; `None` yields the built-in default
    /// configuration.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let config: ExperimentConfig = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        config.validate()?;
        Ok(config)
    }

    /// Hex SHA-256 of the canonical JSON serialization. Identifies the
    /// effective configuration independent of file formatting.
    pub fn sha256_hex(&self) -> Result<String> {
        let canonical = serde_json::to_string_pretty(self).context("serializing config")?;
        let digest = Sha256::digest(canonical.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.scene
            .clone()
            .into_spec()
            .validate()
            .map_err(|e| anyhow::anyhow!("scene: {e}"))?;

        let cb = &self.codebook;
        if cb.num_beams == 0 {
            bail!("codebook.num_beams: must be at least 1");
        }
        for (name, v) in [("fov_min_deg", cb.fov_min_deg), ("fov_max_deg", cb.fov_max_deg)] {
            if !v.is_finite() || !(-90.0..=90.0).contains(&v) {
                bail!("codebook.{name}: must lie in [-90, 90] degrees");
            }
        }
        if !(cb.fov_min_deg < cb.fov_max_deg) {
            bail!("codebook.fov_min_deg: must be strictly below fov_max_deg");
        }

        let pert = &self.perturbation;
        for (name, v) in [
            ("beam_angle_offset_std_deg", pert.beam_angle_offset_std_deg),
            ("position_noise_std_m", pert.position_noise_std_m),
            ("gain_jitter_db_std", pert.gain_jitter_db_std),
        ] {
            if !v.is_finite() || v < 0.0 {
                bail!("perturbation.{name}: must be finite and non-negative");
            }
        }

        let sur = &self.surrogate;
        if !sur.sample_spacing_m.is_finite() || !(sur.sample_spacing_m > 0.0) {
            bail!("surrogate.sample_spacing_m: must be a positive length");
        }
        if !(sur.train_fraction > 0.0 && sur.train_fraction < 1.0) {
            bail!("surrogate.train_fraction: must lie strictly between 0 and 1");
        }

        for (section, lr, batch) in [
            ("training", self.training.learning_rate, self.training.batch_size),
            ("finetune", self.finetune.learning_rate, self.finetune.batch_size),
        ] {
            if !lr.is_finite() || lr < 0.0 {
                bail!("{section}.learning_rate: must be finite and non-negative");
            }
            if batch == 0 {
                bail!("{section}.batch_size: must be at least 1");
            }
        }

        if self.twin_train_sizes.is_empty() {
            bail!("twin_train_sizes: must list at least one size");
        }
        let mut prev_count: Option<usize> = None;
        for (i, size) in self.twin_train_sizes.iter().enumerate() {
            match size {
                SizeSpec::Count(c) => {
                    if *c == 0 {
                        bail!("twin_train_sizes[{i}]: size must be at least 1");
                    }
                    if let Some(p) = prev_count {
                        if *c <= p {
                            bail!("twin_train_sizes[{i}]: sizes must be strictly increasing");
                        }
                    }
                    prev_count = Some(*c);
                }
                SizeSpec::Keyword(k) => {
                    if k != "all" {
                        bail!("twin_train_sizes[{i}]: unknown keyword {k:?} (expected \"all\")");
                    }
                    if i + 1 != self.twin_train_sizes.len() {
                        bail!("twin_train_sizes[{i}]: \"all\" must come last");
                    }
                }
            }
        }

        if self.finetune_sizes.is_empty() {
            bail!("finetune_sizes: must list at least one size");
        }
        for (i, w) in self.finetune_sizes.windows(2).enumerate() {
            if w[1] <= w[0] {
                bail!("finetune_sizes[{}]: sizes must be strictly increasing", i + 1);
            }
        }

        if self.seeds.is_empty() {
            bail!("seeds: must list at least one seed");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            bail!("seeds: entries must be unique");
        }

        if self.report_ks.is_empty() {
            bail!("report_ks: must list at least one k");
        }
        for (i, &k) in self.report_ks.iter().enumerate() {
            if k == 0 {
                bail!("report_ks[{i}]: k must be at least 1");
            }
            if k > cb.num_beams {
                bail!("report_ks[{i}]: k={k} exceeds codebook.num_beams={}", cb.num_beams);
            }
            if i > 0 && k <= self.report_ks[i - 1] {
                bail!("report_ks[{i}]: ks must be strictly increasing");
            }
        }

        Ok(())
    }

    /// Largest k appearing in summary tables.
    pub fn k_max(&self) -> usize {
        *self
            .report_ks
            .iter()
            .max()
            .expect("validated configs have at least one k")
    }
}
