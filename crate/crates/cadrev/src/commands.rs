//! Implementations of the command-line subcommands. Every command is a pure
//! function of its inputs, the run configuration and the seed; per-file work
//! runs on `jobs` threads and results are merged in sorted id order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cadrev_core::cad::CadSequence;
use cadrev_core::geometry::{chamfer_distance, model_complexity, retrieve_nearest, sample_surface, PointCloud};
use cadrev_core::metrics::{aggregate_report, score_pair, unparseable_row, EvalReport};
use cadrev_core::model::{train as train_model, EncoderPlan, LossRecord, Model, Sample, Targets, TrainOptions};
use cadrev_core::perturb::{apply_noise, punch_holes, PerturbError};
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::dataset::{self, file_seed, list_clouds, list_sequences, thread_pool, DatasetManifest};
use crate::error::{Error, IoContext, Result};
use crate::{checkpoint, deepcad, ply, report, seqjson};

/// Resolved configuration plus the worker count.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub cfg: RunConfig,
    pub jobs: usize,
}

impl Ctx {
    pub fn new(cfg: RunConfig, jobs: usize) -> Self {
        Self { cfg, jobs: jobs.max(1) }
    }

    fn prepare(&self, out: &Path) -> Result<String> {
        std::fs::create_dir_all(out).at(out)?;
        self.cfg.write_resolved(out)
    }

    fn par_map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(usize, &T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
        thread_pool(self.jobs).install(|| items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect())
    }
}

pub fn synth(ctx: &Ctx, out: &Path) -> Result<DatasetManifest> {
    ctx.prepare(out)?;
    let c = &ctx.cfg;
    dataset::synthesize(out, c.synth.count, c.sample.points, c.synth.split, c.seed, ctx.jobs)
}

/// Samples a cloud for every sequence JSON in `input`.
pub fn sample(ctx: &Ctx, input: &Path, out: &Path) -> Result<usize> {
    ctx.prepare(out)?;
    let files: Vec<(String, PathBuf)> = list_sequences(input)?.into_iter().collect();
    let n = ctx.cfg.sample.points;
    ctx.par_map(&files, |i, (id, path)| {
        let seq = seqjson::read_sequence(path)?;
        let cloud = sample_surface(&seq, n, file_seed(ctx.cfg.seed, i)).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        ply::write_ply(&out.join(format!("{id}.ply")), &cloud)
    })?;
    Ok(files.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbMode {
    Noise,
    Holes,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerturbSummary {
    pub written: Vec<String>,
    /// Skipped ids with the reason.
    pub skipped: Vec<(String, String)>,
}

pub fn perturb(ctx: &Ctx, input: &Path, out: &Path, mode: PerturbMode) -> Result<PerturbSummary> {
    ctx.prepare(out)?;
    let files: Vec<(String, PathBuf)> = list_clouds(input)?.into_iter().collect();
    let results = ctx.par_map(&files, |i, (id, path)| {
        let pc = ply::read_cloud(path)?;
        let seed = file_seed(ctx.cfg.seed, i);
        let (cloud, meta) = match mode {
            PerturbMode::Noise => {
                let spec = ctx.cfg.noise(seed);
                let c = apply_noise(&pc, &spec)?;
                (c, json!({"mode": "noise", "seed": seed, "amplitude": spec.amplitude, "octaves": spec.octaves}))
            }
            PerturbMode::Holes => match punch_holes(&pc, &ctx.cfg.holes(seed)) {
                Ok(p) => (p.cloud, json!({"mode": "holes", "seed": seed, "removed": p.removed, "holes": p.holes})),
                Err(e @ PerturbError::InsufficientPoints { .. }) => return Ok(Err((id.clone(), e.to_string()))),
                Err(e) => return Err(e.into()),
            },
        };
        ply::write_ply(&out.join(format!("{id}.ply")), &cloud)?;
        report::write_json(&out.join(format!("{id}.meta.json")), &meta)?;
        Ok(Ok(id.clone()))
    })?;
    let mut s = PerturbSummary::default();
    for r in results {
        match r {
            Ok(id) => s.written.push(id),
            Err(skip) => s.skipped.push(skip),
        }
    }
    let skipped: Vec<_> = s.skipped.iter().map(|(id, why)| json!({"id": id, "reason": why})).collect();
    report::write_json(&out.join("summary.json"), &json!({"written": s.written, "skipped": skipped}))?;
    Ok(s)
}

fn ensure_same_ids(pred: &BTreeMap<String, PathBuf>, gt: &BTreeMap<String, PathBuf>) -> Result<()> {
    let missing: Vec<&String> = gt.keys().filter(|k| !pred.contains_key(*k)).collect();
    let extra: Vec<&String> = pred.keys().filter(|k| !gt.contains_key(*k)).collect();
    if missing.is_empty() && extra.is_empty() {
        return Ok(());
    }
    let mut msg = String::from("prediction and ground-truth ids differ");
    if !missing.is_empty() {
        msg.push_str(&format!("; missing predictions: {}", missing.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")));
    }
    if !extra.is_empty() {
        msg.push_str(&format!("; predictions without ground truth: {}", extra.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")));
    }
    Err(Error::Invalid(msg))
}

/// Seed offset separating prediction samplings from ground-truth samplings.
const PRED_SAMPLING_SALT: u64 = 0x5bd1_e995_0000_0000;

/// Scores every prediction against its ground truth. Unparseable predictions
/// count as invalid. With `train`, each model's complexity is its smallest
/// chamfer distance to the training clouds.
pub fn eval(ctx: &Ctx, pred: &Path, gt: &Path, out: &Path, train: Option<&Path>) -> Result<EvalReport> {
    let hash = ctx.prepare(out)?;
    let scoring = ctx.cfg.scoring()?;
    let (preds, gts) = (list_sequences(pred)?, list_sequences(gt)?);
    ensure_same_ids(&preds, &gts)?;
    let train_clouds: Option<Vec<PointCloud>> = match train {
        Some(dir) => Some(list_clouds(dir)?.values().map(|p| ply::read_cloud(p)).collect::<Result<_>>()?),
        None => None,
    };
    let ids: Vec<String> = gts.keys().cloned().collect();
    let n = ctx.cfg.eval.cd_points;
    let seed = ctx.cfg.seed;
    let rows = ctx.par_map(&ids, |i, id| {
        let g = seqjson::read_sequence(&gts[id])?;
        let gt_cloud = sample_surface(&g, n, file_seed(seed, i)).ok();
        let mut row = match seqjson::read_sequence(&preds[id]) {
            Ok(p) => {
                let cd = match (&gt_cloud, cadrev_core::cad::validate(&p).valid()) {
                    (Some(gc), true) => sample_surface(&p, n, file_seed(seed ^ PRED_SAMPLING_SALT, i))
                        .ok()
                        .map(|pc| chamfer_distance(&pc.points, &gc.points)),
                    _ => None,
                };
                score_pair(id, &p, &g, cd, &scoring)
            }
            Err(_) => unparseable_row(id, &g, &scoring),
        };
        if let (Some(train), Some(gc)) = (&train_clouds, &gt_cloud) {
            row.complexity = Some(model_complexity(gc, train));
        }
        Ok(row)
    })?;
    let report = aggregate_report(rows, ctx.cfg.eval.complexity_bins)?;
    report::write_report_csv(&out.join("report.csv"), &report)?;
    report::write_json(&out.join("summary.json"), &report::summary_json(&report, &scoring, seed, &hash))?;
    Ok(report)
}

/// Encoder plans and targets for a set of examples.
pub fn prepare_samples(model_cfg: &cadrev_core::model::ModelConfig, examples: &[dataset::Example]) -> Result<Vec<Sample>> {
    examples
        .iter()
        .map(|e| Ok(Sample { plan: EncoderPlan::new(&e.cloud, model_cfg)?, targets: Targets::new(&e.sequence, model_cfg)? }))
        .collect()
}

/// Trains on a dataset split (`None` = every entry), writing `checkpoint.bin`
/// and `loss.csv` to `out`.
pub fn train(ctx: &Ctx, data: &Path, out: &Path, split: Option<&str>, on_step: impl FnMut(&LossRecord)) -> Result<(Model, Vec<LossRecord>)> {
    ctx.prepare(out)?;
    let mcfg = ctx.cfg.model_config()?;
    let examples = dataset::load_examples(data, split)?;
    let samples = prepare_samples(&mcfg, &examples)?;
    let mut model = Model::new(mcfg, ctx.cfg.variant()?, ctx.cfg.train.refiner, ctx.cfg.seed)?;
    let log = train_model(&mut model, &samples, TrainOptions { steps: ctx.cfg.train.steps, seed: ctx.cfg.seed }, on_step)?;
    checkpoint::save(&out.join("checkpoint.bin"), &model)?;
    report::write_loss_csv(&out.join("loss.csv"), &log)?;
    Ok((model, log))
}

/// Writes one predicted sequence per input cloud.
pub fn infer(ctx: &Ctx, ckpt: &Path, input: &Path, out: &Path) -> Result<usize> {
    ctx.prepare(out)?;
    let model = checkpoint::load(ckpt)?;
    let files: Vec<(String, PathBuf)> = list_clouds(input)?.into_iter().collect();
    ctx.par_map(&files, |_, (id, path)| {
        let seq = model.infer(&ply::read_cloud(path)?)?;
        seqjson::write_sequence(&out.join(format!("{id}.json")), &seq)
    })?;
    Ok(files.len())
}

/// Nearest training sequence (by chamfer distance) for every input cloud.
pub fn retrieve(ctx: &Ctx, train: &Path, input: &Path, out: &Path) -> Result<usize> {
    ctx.prepare(out)?;
    let candidates: Vec<(CadSequence, PointCloud)> =
        dataset::load_examples(train, None)?.into_iter().map(|e| (e.sequence, e.cloud)).collect();
    let files: Vec<(String, PathBuf)> = list_clouds(input)?.into_iter().collect();
    ctx.par_map(&files, |_, (id, path)| {
        let q = ply::read_cloud(path)?;
        let seq = retrieve_nearest(&q, &candidates).cloned().unwrap_or_default();
        seqjson::write_sequence(&out.join(format!("{id}.json")), &seq)
    })?;
    Ok(files.len())
}

/// Converts DeepCAD-style JSON files (a file or every `*.json` in a directory).
pub fn import(ctx: &Ctx, input: &Path, out: &Path) -> Result<usize> {
    ctx.prepare(out)?;
    let files: Vec<(String, PathBuf)> = if input.is_dir() {
        list_sequences(input)?.into_iter().collect()
    } else {
        vec![(input.file_stem().and_then(|s| s.to_str()).unwrap_or("model").to_string(), input.to_path_buf())]
    };
    ctx.par_map(&files, |_, (id, path)| {
        let text = std::fs::read_to_string(path).at(path)?;
        let seq = deepcad::import_deepcad(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        seqjson::write_sequence(&out.join(format!("{id}.json")), &seq)
    })?;
    Ok(files.len())
}

/// Markdown comparison of evaluation summaries, written to `out`.
pub fn report(summaries: &[PathBuf], out: &Path) -> Result<String> {
    let named = summaries
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).at(p)?;
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))?;
            let name = p.parent().and_then(|d| d.file_name()).and_then(|s| s.to_str()).unwrap_or("run").to_string();
            Ok((name, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let table = report::compare_summaries(&named);
    std::fs::write(out, &table).at(out)?;
    Ok(table)
}
