//! The five experiment commands and their shared plumbing.
//!
//! Every command is a pure function of (config, input files): all randomness
//! derives from the per-experiment seeds through fixed stream indices, so a
//! rerun with the same inputs rewrites every output byte-for-byte. Output
//! files are written atomically (temp file + rename) and any files a failing
//! command already produced are removed before it returns.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;
use twinbeam::codebook::{build_from_angles, build_uniform_fov, Codebook};
use twinbeam::dataset::{
    feature_matrix, fit_norm_stats, load_csv_expecting, make_surrogate_real, split, Dataset,
    PerturbationSpec,
};
use twinbeam::evaluate::{evaluate_predictor, nn_lookup, EvalReport};
use twinbeam::geometry::{discretize_grids, SceneSpec};
use twinbeam::neural::{predict_topk, train, Checkpoint, TrainConfig, TrainMode};
use twinbeam::dataset::generate_twin_dataset;
use twinbeam::seeding::{derive_seed, shuffled_indices};

use crate::config::ExperimentConfig;

/// Stream indices for [`derive_seed`]: every consumer of randomness under an
/// experiment seed draws from its own derived stream, so adding or removing
/// one consumer never shifts the draws of another.
pub const STREAM_OFFSETS: u64 = 0;
pub const STREAM_SURROGATE: u64 = 1;
pub const STREAM_SPLIT: u64 = 2;
pub const STREAM_TRAIN: u64 = 3;
// Stream 4 is retired (was a randomized twin-subset draw; the sweep now
// decimates deterministically). Keeping the gap leaves other streams stable.
pub const STREAM_FT_SUBSET: u64 = 5;
pub const STREAM_FINETUNE: u64 = 6;
pub const STREAM_SCRATCH: u64 = 7;
pub const STREAM_TWIN_SPLIT: u64 = 8;

/// Everything a command needs: the validated config, its content hash, the
/// resolved output directory, and the effective seed list.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
}

impl RunContext {
    /// Resolves CLI arguments into a ready-to-run context. `--out` beats the
    /// config's `output_dir`; one of the two must be present. `--seeds`
    /// replaces the config's seed list.
    pub fn new(
        config_path: Option<&Path>,
        out_override: Option<PathBuf>,
        seeds_override: Option<Vec<u64>>,
    ) -> Result<Self> {
        let config = ExperimentConfig::load(config_path)?;
        let config_sha256 = config.sha256_hex()?;
        let out_dir = match out_override.or_else(|| config.output_dir.clone()) {
            Some(dir) => dir,
            None => bail!("no output directory: pass --out or set output_dir in the config"),
        };
        let seeds = match seeds_override {
            Some(seeds) => {
                if seeds.is_empty() {
                    bail!("--seeds: must list at least one seed");
                }
                let mut sorted = seeds.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != seeds.len() {
                    bail!("--seeds: entries must be unique");
                }
                seeds
            }
            None => config.seeds.clone(),
        };
        Ok(RunContext {
            config,
            config_sha256,
            out_dir,
            seeds,
        })
    }

    fn scene(&self) -> Result<SceneSpec> {
        let spec = self.config.scene.clone().into_spec();
        spec.validate().context("scene")?;
        Ok(spec)
    }

    fn base_codebook(&self, scene: &SceneSpec) -> Result<Codebook> {
        let cb = &self.config.codebook;
        Ok(build_uniform_fov(
            cb.num_beams,
            cb.fov_min_deg.to_radians(),
            cb.fov_max_deg.to_radians(),
            &scene.array,
        )?)
    }

    /// Per-beam pointing errors of the deployed system for one seed, radians.
    fn offsets(&self, seed: u64) -> Vec<f64> {
        PerturbationSpec::draw_offsets(
            self.config.codebook.num_beams,
            self.config.perturbation.beam_angle_offset_std_deg.to_radians(),
            derive_seed(seed, STREAM_OFFSETS),
        )
    }

    fn meta(&self, command: &str, extra: serde_json::Value) -> serde_json::Value {
        let mut meta = json!({
            "command": command,
            "config_sha256": self.config_sha256,
            "seeds": self.seeds,
        });
        if let (Some(m), Some(e)) = (meta.as_object_mut(), extra.as_object()) {
            for (k, v) in e {
                m.insert(k.clone(), v.clone());
            }
        }
        meta
    }
}

/// Collects the files one command run writes; atomically writes each, and
/// removes all of them if the command fails before [`OutputSet::commit`].
struct OutputSet {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputSet {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!("{name}.tmp"));
        fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, &path)
            .with_context(|| format!("moving {} into place", path.display()))?;
        log::info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    /// Writes a CSV together with its `<stem>.meta.json` sidecar.
    fn write_csv(&mut self, name: &str, csv: &str, meta: &serde_json::Value) -> Result<()> {
        self.write(name, csv.as_bytes())?;
        let stem = name.strip_suffix(".csv").unwrap_or(name);
        let mut text = serde_json::to_string_pretty(meta).context("serializing sidecar")?;
        text.push('\n');
        self.write(&format!("{stem}.meta.json"), text.as_bytes())
    }

    fn write_json(&mut self, name: &str, mut text: String) -> Result<()> {
        if !text.ends_with('\n') {
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for path in &self.written {
            match fs::remove_file(path) {
                Ok(()) => log::warn!("removed partial output {}", path.display()),
                Err(e) => log::warn!("could not remove partial output {}: {e}", path.display()),
            }
        }
    }
}

/// Which twin codebook a model was trained against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwinVariant {
    /// Twin rebuilt with the measured (deployed) beam angles.
    Matched,
    /// Twin that still assumes the nominal uniform codebook.
    Uniform,
}

impl TwinVariant {
    pub const BOTH: [TwinVariant; 2] = [TwinVariant::Matched, TwinVariant::Uniform];

    pub fn name(self) -> &'static str {
        match self {
            TwinVariant::Matched => "matched",
            TwinVariant::Uniform => "uniform",
        }
    }
}

pub fn twin_uniform_name() -> String {
    "twin_uniform.csv".to_owned()
}

pub fn twin_matched_name(seed: u64) -> String {
    format!("twin_matched_seed{seed}.csv")
}

pub fn real_name(seed: u64) -> String {
    format!("real_seed{seed}.csv")
}

pub fn model_name(variant: TwinVariant, seed: u64) -> String {
    format!("model_{}_seed{seed}.json", variant.name())
}

fn load_dataset(dir: &Path, name: &str, num_beams: usize) -> Result<Dataset> {
    let path = dir.join(name);
    load_csv_expecting(&path, num_beams)
        .with_context(|| format!("loading {} (run `generate` first?)", path.display()))
}

fn load_checkpoint(dir: &Path, name: &str) -> Result<Checkpoint> {
    let path = dir.join(name);
    let text = fs::read_to_string(&path)
        .with_context(|| format!("loading {} (run `zeroshot` first?)", path.display()))?;
    Ok(Checkpoint::from_json(&text)?)
}

/// Fits normalization on `data`, trains a fresh classifier on it, and bundles
/// the result as a checkpoint.
fn train_fresh(ctx: &RunContext, data: &Dataset, rng_seed: u64) -> Result<Checkpoint> {
    let t = &ctx.config.training;
    let cfg = TrainConfig {
        learning_rate: t.learning_rate,
        epochs: t.epochs,
        batch_size: t.batch_size,
        rng_seed,
        mode: TrainMode::Train,
        step_decay: t.step_decay,
    };
    let stats = fit_norm_stats(data)?;
    let features = feature_matrix(data, &stats, ctx.config.feature_mode);
    let (params, history) = train(
        None,
        features.view(),
        &data.labels(),
        ctx.config.codebook.num_beams,
        &cfg,
    )?;
    if let Some(last) = history.last() {
        log::debug!("training loss after {} epochs: {last:.4}", history.len());
    }
    Ok(Checkpoint {
        params,
        norm_stats: stats,
        feature_mode: ctx.config.feature_mode,
    })
}

/// Continues training a checkpoint on `data` with the fine-tune recipe. The
/// checkpoint's normalization and feature layout are reused so the network
/// sees inputs on the scale it was trained with.
fn finetune_checkpoint(
    ctx: &RunContext,
    start: &Checkpoint,
    data: &Dataset,
    rng_seed: u64,
) -> Result<Checkpoint> {
    let f = &ctx.config.finetune;
    let cfg = TrainConfig {
        learning_rate: f.learning_rate,
        epochs: f.epochs,
        batch_size: f.batch_size,
        rng_seed,
        mode: TrainMode::Finetune,
        step_decay: false,
    };
    let features = feature_matrix(data, &start.norm_stats, start.feature_mode);
    let (params, _) = train(
        Some(&start.params),
        features.view(),
        &data.labels(),
        ctx.config.codebook.num_beams,
        &cfg,
    )?;
    Ok(Checkpoint {
        params,
        norm_stats: start.norm_stats.clone(),
        feature_mode: start.feature_mode,
    })
}

/// Scores a checkpoint's top-k beam predictions on a labeled test set.
fn eval_checkpoint(ckpt: &Checkpoint, test: &Dataset, k_max: usize) -> Result<EvalReport> {
    let report = evaluate_predictor(
        |position| {
            let features = ckpt.feature_mode.features(position, &ckpt.norm_stats, test.origin);
            predict_topk(&ckpt.params, &features, k_max)
        },
        test,
        k_max,
    )?;
    Ok(report)
}

/// Drive-by sample positions: the scene's grids re-discretized at the
/// surrogate sampling interval.
fn trajectory_positions(scene: &SceneSpec, spacing: f64) -> Vec<twinbeam::geometry::Position> {
    let mut sampled = scene.clone();
    for grid in &mut sampled.grids {
        grid.spacing = spacing;
    }
    discretize_grids(&sampled)
}

fn real_test_split(ctx: &RunContext, real: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    Ok(split(
        real,
        ctx.config.surrogate.train_fraction,
        derive_seed(seed, STREAM_SPLIT),
    )?)
}

/// Appends one `EvalReport` to a summary CSV body as rows keyed by `prefix`
/// (the columns before `k`), restricted to the configured ks.
fn push_report_rows(rows: &mut String, prefix: &str, report: &EvalReport, ks: &[usize]) {
    for &k in ks {
        let acc = report.accuracy_at(k).expect("k is validated against k_max");
        let rel = report
            .relative_power_at(k)
            .expect("k is validated against k_max");
        rows.push_str(&format!("{prefix},{k},{acc},{rel}\n"));
    }
}

fn offsets_deg(offsets: &[f64]) -> Vec<f64> {
    offsets.iter().map(|o| o.to_degrees()).collect()
}

/// `generate`: write the twin dataset, the per-seed measured-codebook twins,
/// and the per-seed surrogate-real datasets.
pub fn cmd_generate(ctx: &RunContext) -> Result<()> {
    let scene = ctx.scene()?;
    let base = ctx.base_codebook(&scene)?;
    let num_beams = base.num_beams();
    let mut out = OutputSet::new(&ctx.out_dir)?;

    let grid_points = discretize_grids(&scene).len();
    let twin = generate_twin_dataset(&scene, &base)?;
    if twin.len() != grid_points {
        log::warn!(
            "twin has {} rows for {grid_points} grid points (positions at the base station are skipped)",
            twin.len()
        );
    }
    out.write_csv(
        &twin_uniform_name(),
        std::str::from_utf8(&twinbeam::dataset::csv_bytes(&twin)?)
            .expect("CSV bytes are UTF-8"),
        &ctx.meta(
            "generate",
            json!({
                "file": twin_uniform_name(),
                "codebook": "uniform",
                "num_beams": num_beams,
                "grid_points": grid_points,
                "rows": twin.len(),
            }),
        ),
    )?;
    out.write_json("codebook_uniform.json", base.to_json()?)?;

    let trajectory = trajectory_positions(&scene, ctx.config.surrogate.sample_spacing_m);
    for &seed in &ctx.seeds {
        let offsets = ctx.offsets(seed);
        let deployed_angles: Vec<f64> = base
            .angles
            .iter()
            .zip(&offsets)
            .map(|(a, o)| a + o)
            .collect();
        let matched = build_from_angles(&deployed_angles, &scene.array)?;
        out.write_json(&format!("codebook_matched_seed{seed}.json"), matched.to_json()?)?;

        let twin_matched = generate_twin_dataset(&scene, &matched)?;
        out.write_csv(
            &twin_matched_name(seed),
            std::str::from_utf8(&twinbeam::dataset::csv_bytes(&twin_matched)?)
                .expect("CSV bytes are UTF-8"),
            &ctx.meta(
                "generate",
                json!({
                    "file": twin_matched_name(seed),
                    "codebook": "matched",
                    "seed": seed,
                    "offsets_deg": offsets_deg(&offsets),
                    "num_beams": num_beams,
                    "grid_points": grid_points,
                    "rows": twin_matched.len(),
                }),
            ),
        )?;

        let perturbation = PerturbationSpec {
            position_noise_std: ctx.config.perturbation.position_noise_std_m,
            beam_angle_offsets: offsets.clone(),
            gain_jitter_db_std: ctx.config.perturbation.gain_jitter_db_std,
            rng_seed: derive_seed(seed, STREAM_SURROGATE),
        };
        let real = make_surrogate_real(&scene, &base, &perturbation, &trajectory)?;
        out.write_csv(
            &real_name(seed),
            std::str::from_utf8(&twinbeam::dataset::csv_bytes(&real)?)
                .expect("CSV bytes are UTF-8"),
            &ctx.meta(
                "generate",
                json!({
                    "file": real_name(seed),
                    "seed": seed,
                    "offsets_deg": offsets_deg(&offsets),
                    "sample_positions": trajectory.len(),
                    "rows": real.len(),
                }),
            ),
        )?;
    }

    out.commit();
    Ok(())
}

/// `zeroshot`: train one classifier per twin variant and seed, evaluate on
/// the surrogate-real test split (or on held-out twin points in sanity mode),
/// and write checkpoints, reports, and a summary table.
pub fn cmd_zeroshot(ctx: &RunContext, eval_on_twin: bool) -> Result<()> {
    let num_beams = ctx.config.codebook.num_beams;
    let k_max = ctx.config.k_max();
    let mut out = OutputSet::new(&ctx.out_dir)?;
    let twin_uniform = load_dataset(&ctx.out_dir, &twin_uniform_name(), num_beams)?;
    let mut rows = String::from("variant,seed,k,accuracy,relative_power\n");

    for &seed in &ctx.seeds {
        let twin_matched = load_dataset(&ctx.out_dir, &twin_matched_name(seed), num_beams)?;
        let real_test = if eval_on_twin {
            None
        } else {
            let real = load_dataset(&ctx.out_dir, &real_name(seed), num_beams)?;
            Some(real_test_split(ctx, &real, seed)?.1)
        };

        for variant in TwinVariant::BOTH {
            let twin = match variant {
                TwinVariant::Matched => &twin_matched,
                TwinVariant::Uniform => &twin_uniform,
            };
            let train_seed = derive_seed(seed, STREAM_TRAIN);
            let report = if eval_on_twin {
                let (twin_train, twin_test) = split(
                    twin,
                    ctx.config.surrogate.train_fraction,
                    derive_seed(seed, STREAM_TWIN_SPLIT),
                )?;
                let ckpt = train_fresh(ctx, &twin_train, train_seed)?;
                let report = eval_checkpoint(&ckpt, &twin_test, k_max)?;
                out.write_json(
                    &format!("report_zeroshot_twin_{}_seed{seed}.json", variant.name()),
                    report.to_json()?,
                )?;
                report
            } else {
                let ckpt = train_fresh(ctx, twin, train_seed)?;
                out.write_json(&model_name(variant, seed), ckpt.to_json()?)?;
                let test = real_test.as_ref().expect("real split exists in normal mode");
                let report = eval_checkpoint(&ckpt, test, k_max)?;
                out.write_json(
                    &format!("report_zeroshot_{}_seed{seed}.json", variant.name()),
                    report.to_json()?,
                )?;
                report
            };
            log::info!(
                "zeroshot {} seed {seed}: top-1 accuracy {:.3}",
                variant.name(),
                report.accuracy_at(1).unwrap_or(f64::NAN)
            );
            push_report_rows(
                &mut rows,
                &format!("{},{seed}", variant.name()),
                &report,
                &ctx.config.report_ks,
            );
        }
    }

    let (summary_name, evaluation) = if eval_on_twin {
        ("zeroshot_twin_summary.csv", "held-out twin points")
    } else {
        ("zeroshot_summary.csv", "surrogate-real test split")
    };
    out.write_csv(
        summary_name,
        &rows,
        &ctx.meta(
            "zeroshot",
            json!({
                "file": summary_name,
                "evaluation": evaluation,
                "report_ks": ctx.config.report_ks,
            }),
        ),
    )?;
    out.commit();
    Ok(())
}

/// `sweep-twinsize`: learning curve of the matched-twin classifier over twin
/// training subsets of increasing size.
///
/// Twin data is synthetic and free to place, so a size budget is spent as an
/// even decimation of the grid enumeration (uniform spatial coverage) rather
/// than a random draw; random subsets at small sizes mostly measure coverage
/// luck instead of the size effect. Seeds still vary the deployed offsets,
/// the surrogate world, and the training randomness.
pub fn cmd_sweep_twinsize(ctx: &RunContext) -> Result<()> {
    let num_beams = ctx.config.codebook.num_beams;
    let k_max = ctx.config.k_max();
    let mut out = OutputSet::new(&ctx.out_dir)?;
    let mut rows = String::from("size,seed,k,accuracy,relative_power\n");
    let mut resolved_for_meta: Option<Vec<usize>> = None;

    for &seed in &ctx.seeds {
        let twin = load_dataset(&ctx.out_dir, &twin_matched_name(seed), num_beams)?;
        let real = load_dataset(&ctx.out_dir, &real_name(seed), num_beams)?;
        let (_, real_test) = real_test_split(ctx, &real, seed)?;

        let mut sizes = ctx
            .config
            .twin_train_sizes
            .iter()
            .map(|s| s.resolve(twin.len()))
            .collect::<Result<Vec<_>>>()?;
        sizes.dedup();
        resolved_for_meta.get_or_insert_with(|| sizes.clone());

        for &size in &sizes {
            let subset = twin.subset(&spread_indices(twin.len(), size))?;
            let ckpt = train_fresh(ctx, &subset, derive_seed(seed, STREAM_TRAIN))?;
            let report = eval_checkpoint(&ckpt, &real_test, k_max)?;
            log::info!(
                "sweep seed {seed} size {size}: top-1 accuracy {:.3}",
                report.accuracy_at(1).unwrap_or(f64::NAN)
            );
            push_report_rows(&mut rows, &format!("{size},{seed}"), &report, &ctx.config.report_ks);
        }
    }

    out.write_csv(
        "sweep_twinsize.csv",
        &rows,
        &ctx.meta(
            "sweep-twinsize",
            json!({
                "file": "sweep_twinsize.csv",
                "variant": "matched",
                "resolved_sizes": resolved_for_meta,
                "subset_rule": "evenly spaced decimation of the twin grid order",
                "report_ks": ctx.config.report_ks,
            }),
        ),
    )?;
    out.commit();
    Ok(())
}

/// `size` indices evenly spread across `0..len`; strictly increasing, so the
/// subset keeps the grid's spatial coverage at any budget.
fn spread_indices(len: usize, size: usize) -> Vec<usize> {
    (0..size).map(|i| i * len / size).collect()
}

/// `finetune`: adapt each zero-shot checkpoint on n surrogate-real points and
/// compare against training from scratch on the same n points.
pub fn cmd_finetune(ctx: &RunContext) -> Result<()> {
    let num_beams = ctx.config.codebook.num_beams;
    let k_max = ctx.config.k_max();
    let mut out = OutputSet::new(&ctx.out_dir)?;
    let mut rows = String::from("n,seed,variant,k,accuracy,relative_power\n");

    for &seed in &ctx.seeds {
        let real = load_dataset(&ctx.out_dir, &real_name(seed), num_beams)?;
        let (pool, real_test) = real_test_split(ctx, &real, seed)?;
        let order = shuffled_indices(pool.len(), derive_seed(seed, STREAM_FT_SUBSET));
        let checkpoints: Vec<(TwinVariant, Checkpoint)> = TwinVariant::BOTH
            .iter()
            .map(|&v| Ok((v, load_checkpoint(&ctx.out_dir, &model_name(v, seed))?)))
            .collect::<Result<_>>()?;

        for &n in &ctx.config.finetune_sizes {
            if n > pool.len() {
                bail!(
                    "finetune size {n} exceeds the available real training pool ({} points)",
                    pool.len()
                );
            }
            let subset = if n > 0 {
                Some(pool.subset(&order[..n])?)
            } else {
                None
            };

            for (variant, start) in &checkpoints {
                let adapted = match &subset {
                    Some(data) => {
                        finetune_checkpoint(ctx, start, data, derive_seed(seed, STREAM_FINETUNE))?
                    }
                    None => start.clone(),
                };
                let report = eval_checkpoint(&adapted, &real_test, k_max)?;
                push_report_rows(
                    &mut rows,
                    &format!("{n},{seed},finetuned_{}", variant.name()),
                    &report,
                    &ctx.config.report_ks,
                );
            }

            if let Some(data) = &subset {
                let scratch = train_fresh(ctx, data, derive_seed(seed, STREAM_SCRATCH))?;
                let report = eval_checkpoint(&scratch, &real_test, k_max)?;
                push_report_rows(
                    &mut rows,
                    &format!("{n},{seed},scratch"),
                    &report,
                    &ctx.config.report_ks,
                );
            }
        }
        log::info!("finetune seed {seed}: pool {} points, test {} points", pool.len(), real_test.len());
    }

    out.write_csv(
        "finetune_curve.csv",
        &rows,
        &ctx.meta(
            "finetune",
            json!({
                "file": "finetune_curve.csv",
                "variants": ["finetuned_matched", "finetuned_uniform", "scratch"],
                "finetune_sizes": ctx.config.finetune_sizes,
                "note": "scratch rows start at the smallest nonzero n",
                "report_ks": ctx.config.report_ks,
            }),
        ),
    )?;
    out.commit();
    Ok(())
}

/// `nn-baseline`: classify every surrogate-real point with its nearest twin
/// neighbor's beam ranking; write per-point traces, per-seed reports, and a
/// summary table.
pub fn cmd_nn_baseline(ctx: &RunContext) -> Result<()> {
    let num_beams = ctx.config.codebook.num_beams;
    let k_max = ctx.config.k_max();
    let mut out = OutputSet::new(&ctx.out_dir)?;
    let twin = load_dataset(&ctx.out_dir, &twin_uniform_name(), num_beams)?;
    let mut rows = String::from("seed,k,accuracy,relative_power\n");

    for &seed in &ctx.seeds {
        let real = load_dataset(&ctx.out_dir, &real_name(seed), num_beams)?;

        let mut trace = String::from("point_index,real_label,twin_label\n");
        for (index, point) in real.points.iter().enumerate() {
            let neighbor = nn_lookup(&twin, point.position)?;
            trace.push_str(&format!("{index},{},{}\n", point.label, neighbor.label));
        }
        out.write_csv(
            &format!("nn_trace_seed{seed}.csv"),
            &trace,
            &ctx.meta(
                "nn-baseline",
                json!({
                    "file": format!("nn_trace_seed{seed}.csv"),
                    "seed": seed,
                    "twin": twin_uniform_name(),
                    "rows": real.len(),
                }),
            ),
        )?;

        let report = evaluate_predictor(
            |position| Ok(nn_lookup(&twin, position)?.ranking),
            &real,
            k_max,
        )?;
        log::info!(
            "nn-baseline seed {seed}: top-1 accuracy {:.3}",
            report.accuracy_at(1).unwrap_or(f64::NAN)
        );
        out.write_json(&format!("report_nn_seed{seed}.json"), report.to_json()?)?;
        push_report_rows(&mut rows, &seed.to_string(), &report, &ctx.config.report_ks);
    }

    out.write_csv(
        "nn_baseline_summary.csv",
        &rows,
        &ctx.meta(
            "nn-baseline",
            json!({
                "file": "nn_baseline_summary.csv",
                "twin": twin_uniform_name(),
                "topk_rule": "twin neighbor's beams in descending twin power order",
                "evaluation": "all surrogate-real points",
                "report_ks": ctx.config.report_ks,
            }),
        ),
    )?;
    out.commit();
    Ok(())
}
