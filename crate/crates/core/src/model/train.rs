use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EncoderPlan, LossParts, Model, ModelError, Targets};
use crate::nn::{Adam, AdamConfig, Dropout, Graph, Grads};

/// Pre-computed encoder grouping and teacher-forcing targets of one example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub plan: EncoderPlan,
    pub targets: Targets,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub steps: u64,
    pub seed: u64,
}

/// Batch-mean loss components after one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: u64,
    pub parts: LossParts,
}

/// Fraction of the run held at the peak rate before the cosine decay starts.
pub const DECAY_START: f64 = 0.6;

/// Global gradient-norm ceiling applied before every update.
pub const GRAD_CLIP: f64 = 1.0;

/// Deterministic minibatch Adam with norm clipping, linear warmup, a constant
/// plateau and a cosine decay over the last part of `opts.steps`. The sample order is
/// reshuffled each epoch from `seed`. `on_step` sees every record as it is
/// produced.
pub fn train(
    model: &mut Model,
    data: &[Sample],
    opts: TrainOptions,
    mut on_step: impl FnMut(&LossRecord),
) -> Result<Vec<LossRecord>, ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let cfg = model.cfg.clone();
    let mut adam = Adam::new(AdamConfig {
        lr: cfg.lr,
        warmup: cfg.warmup,
        decay_steps: opts.steps,
        decay_start: (opts.steps as f64 * DECAY_START) as u64,
        ..AdamConfig::default()
    }, &model.store);
    let mut order_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut drop = Dropout { p: cfg.dropout, rng: ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15) };
    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0;
    let mut grads = Grads::zeros_like(&model.store);
    let mut log = Vec::with_capacity(opts.steps as usize);
    let b = cfg.batch_size;
    for step in 1..=opts.steps {
        grads.zero();
        let mut mean = LossParts::default();
        for _ in 0..b {
            if cursor == order.len() {
                order = (0..data.len()).collect();
                order.shuffle(&mut order_rng);
                cursor = 0;
            }
            let s = &data[order[cursor]];
            cursor += 1;
            let mut g = Graph::new(&model.store);
            let d = (cfg.dropout > 0.0).then_some(&mut drop);
            let f = model.forward_train(&mut g, &s.plan, &s.targets, d);
            let (loss, p) = model.loss(&mut g, &f, &s.targets)?;
            if !p.total.is_finite() {
                return Err(ModelError::Divergence(step));
            }
            g.backward_scaled(loss, 1.0 / b as f64, &mut grads);
            let w = 1.0 / b as f64;
            mean.total += w * p.total;
            mean.types += w * p.types;
            mean.loops += w * p.loops;
            mean.ext += w * p.ext;
            mean.refine += w * p.refine;
        }
        if grads.0.iter().flatten().any(|x| !x.is_finite()) {
            return Err(ModelError::Divergence(step));
        }
        grads.clip_norm(GRAD_CLIP);
        adam.update(&mut model.store, &grads);
        let rec = LossRecord { step, parts: mean };
        on_step(&rec);
        log.push(rec);
    }
    Ok(log)
}
