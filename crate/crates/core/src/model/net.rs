use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EncoderPlan, ModelConfig, ModelError, PointEncoder, Targets};
use crate::cad::{TokenType, EXTRUSION_SLOTS, PRIMITIVE_SLOTS};
use crate::nn::{AttentionBlock, Dropout, Graph, Init, LayerNorm, Linear, Mlp, ParamId, ParamStore, Tensor, Var};

/// `Hierarchical` routes loop and extrusion tokens to dedicated decoders;
/// `Flat` predicts every parameter of a token directly from its embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Hierarchical,
    Flat,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Hierarchical => "hierarchical",
            Variant::Flat => "flat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hierarchical" => Some(Variant::Hierarchical),
            "flat" => Some(Variant::Flat),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Heads {
    Hierarchical {
        slot_c: ParamId,
        slot_pos: ParamId,
        blocks: Vec<AttentionBlock>,
        ln: LayerNorm,
        loop_head: Linear,
        refiner: Mlp,
    },
    Flat {
        loop_head: Linear,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub cfg: ModelConfig,
    pub variant: Variant,
    pub use_refiner: bool,
    pub store: ParamStore,
    encoder: PointEncoder,
    f_c: ParamId,
    pos: ParamId,
    blocks: Vec<AttentionBlock>,
    ln: LayerNorm,
    type_head: Mlp,
    ext_head: Mlp,
    heads: Heads,
}

/// Shared part of the forward pass: point features, token embeddings
/// (`l_max × d_z`) and type logits (`l_max × 3`).
#[derive(Debug, Clone, Copy)]
pub struct Trunk {
    pub f_p: Var,
    pub tokens: Var,
    pub type_logits: Var,
}

/// Routed decoder outputs. Loop logits are `(slots·6) × classes` with
/// `n_p_max` slots per loop token, extrusion logits `(L_e·11) × classes`,
/// offsets `slots × 6` in bin units.
#[derive(Debug, Clone)]
pub struct Forward {
    pub trunk: Trunk,
    pub loop_positions: Vec<usize>,
    pub ext_positions: Vec<usize>,
    pub loop_logits: Option<Var>,
    pub ext_logits: Option<Var>,
    pub offsets: Option<Var>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub total: f64,
    pub types: f64,
    pub loops: f64,
    pub ext: f64,
    pub refine: f64,
}

fn positions(types: &[TokenType], kind: TokenType) -> Vec<usize> {
    types.iter().enumerate().filter(|(_, &t)| t == kind).map(|(i, _)| i).collect()
}

fn drop_ref<'a>(d: &'a mut Option<&mut Dropout>) -> Option<&'a mut Dropout> {
    d.as_deref_mut()
}

impl Model {
    pub fn new(cfg: ModelConfig, variant: Variant, use_refiner: bool, seed: u64) -> Result<Self, ModelError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let s = &mut store;
        let r = &mut rng;
        let d = cfg.d_z;
        let c = cfg.classes();
        let att = cfg.attention();
        let encoder = PointEncoder::new(s, &cfg, r);
        let f_c = s.add("le.const", cfg.l_max, d, Init::Uniform(1.0), r);
        let pos = s.add("le.pos", cfg.l_max, d, Init::Uniform(1.0), r);
        let blocks = (0..cfg.decoder_blocks)
            .map(|i| AttentionBlock::new(s, &format!("le.block{i}"), &att, Some(cfg.d_p), r))
            .collect();
        let ln = LayerNorm::new(s, "le.ln", d, r);
        let type_head = Mlp::new(s, "type", &[d, cfg.type_hidden, cfg.type_hidden, 3], Init::Zeros, r);
        let heads = match variant {
            Variant::Hierarchical => {
                let slot_c = s.add("loop.const", cfg.n_p_max * cfg.l_max, d, Init::Uniform(1.0), r);
                let slot_pos = s.add("loop.pos", cfg.n_p_max, d, Init::Uniform(1.0), r);
                let blocks = (0..cfg.loop_blocks)
                    .map(|i| AttentionBlock::new(s, &format!("loop.block{i}"), &att, Some(d), r))
                    .collect();
                let ln = LayerNorm::new(s, "loop.ln", d, r);
                let loop_head = Linear::new(s, "loop.head", d, PRIMITIVE_SLOTS * c, Init::Zeros, r);
                let h = cfg.refiner_hidden;
                let refiner =
                    Mlp::new(s, "refiner", &[d + PRIMITIVE_SLOTS * c, h, h, h, PRIMITIVE_SLOTS], Init::Zeros, r);
                Heads::Hierarchical { slot_c, slot_pos, blocks, ln, loop_head, refiner }
            }
            Variant::Flat => Heads::Flat {
                loop_head: Linear::new(s, "flat.loop", d, cfg.n_p_max * PRIMITIVE_SLOTS * c, Init::Zeros, r),
            },
        };
        let ext_head =
            Mlp::new(s, "ext", &[d, cfg.ext_hidden, cfg.ext_hidden, EXTRUSION_SLOTS * c], Init::Zeros, r);
        let use_refiner = use_refiner && variant == Variant::Hierarchical;
        Ok(Self { cfg, variant, use_refiner, store, encoder, f_c, pos, blocks, ln, type_head, ext_head, heads })
    }

    /// Rebuilds a model around saved parameters; every tensor must be present
    /// with its expected shape.
    pub fn from_store(cfg: ModelConfig, variant: Variant, use_refiner: bool, store: ParamStore) -> Result<Self, ModelError> {
        let mut m = Self::new(cfg, variant, use_refiner, 0)?;
        if store.len() != m.store.len() {
            return Err(ModelError::Config("checkpoint parameter count differs from the architecture"));
        }
        for (name, t) in store.iter() {
            m.store.set(name, Tensor { shape: t.shape.clone(), data: t.data.clone(), grad: None })?;
        }
        Ok(m)
    }

    pub fn trunk(&self, g: &mut Graph, plan: &EncoderPlan, mut drop: Option<&mut Dropout>) -> Trunk {
        let f_p = self.encoder.forward(g, plan, &self.cfg);
        let c = g.param(self.f_c);
        let p = g.param(self.pos);
        let mut x = g.add(c, p);
        for b in &self.blocks {
            x = b.forward(g, x, Some(f_p), drop_ref(&mut drop));
        }
        let tokens = self.ln.forward(g, x);
        let type_logits = self.type_head.forward(g, tokens);
        Trunk { f_p, tokens, type_logits }
    }

    /// Decodes the tokens marked `Loop` / `Extrusion` in `types`.
    pub fn heads(&self, g: &mut Graph, trunk: Trunk, types: &[TokenType], mut drop: Option<&mut Dropout>) -> Forward {
        let loop_positions = positions(types, TokenType::Loop);
        let ext_positions = positions(types, TokenType::Extrusion);
        let c = self.cfg.classes();
        let npm = self.cfg.n_p_max;
        let (mut loop_logits, mut offsets) = (None, None);
        if !loop_positions.is_empty() {
            let f_rho = g.gather_rows(trunk.tokens, &loop_positions);
            let slots = loop_positions.len() * npm;
            match &self.heads {
                Heads::Hierarchical { slot_c, slot_pos, blocks, ln, loop_head, refiner } => {
                    let cst = g.param(*slot_c);
                    let cst = g.gather_rows(cst, &(0..slots).collect::<Vec<_>>());
                    let sp = g.param(*slot_pos);
                    let sp = g.gather_rows(sp, &(0..slots).map(|k| k % npm).collect::<Vec<_>>());
                    let tok = g.gather_rows(f_rho, &(0..slots).map(|k| k / npm).collect::<Vec<_>>());
                    let x = g.add(cst, sp);
                    let mut x = g.add(x, tok);
                    for b in blocks {
                        x = b.forward(g, x, Some(f_rho), drop_ref(&mut drop));
                    }
                    let h = ln.forward(g, x);
                    let l = loop_head.forward(g, h);
                    let l = g.reshape(l, slots * PRIMITIVE_SLOTS, c);
                    if self.use_refiner {
                        let probs = g.softmax_rows(l);
                        let probs = g.reshape(probs, slots, PRIMITIVE_SLOTS * c);
                        let inp = g.concat_cols(&[h, probs]);
                        offsets = Some(refiner.forward(g, inp));
                    }
                    loop_logits = Some(l);
                }
                Heads::Flat { loop_head } => {
                    let l = loop_head.forward(g, f_rho);
                    loop_logits = Some(g.reshape(l, slots * PRIMITIVE_SLOTS, c));
                }
            }
        }
        let ext_logits = (!ext_positions.is_empty()).then(|| {
            let f_e = g.gather_rows(trunk.tokens, &ext_positions);
            let e = self.ext_head.forward(g, f_e);
            g.reshape(e, ext_positions.len() * EXTRUSION_SLOTS, c)
        });
        Forward { trunk, loop_positions, ext_positions, loop_logits, ext_logits, offsets }
    }

    /// Teacher-forced forward pass routed by the ground-truth types.
    pub fn forward_train(&self, g: &mut Graph, plan: &EncoderPlan, t: &Targets, mut drop: Option<&mut Dropout>) -> Forward {
        let trunk = self.trunk(g, plan, drop_ref(&mut drop));
        self.heads(g, trunk, &t.types, drop)
    }

    /// Joint loss as a graph node plus its logged components.
    pub fn loss(&self, g: &mut Graph, f: &Forward, t: &Targets) -> Result<(Var, LossParts), ModelError> {
        let l_max = self.cfg.l_max;
        let type_targets: Vec<usize> = t.types.iter().map(|t| t.index()).collect();
        // Mean over the real tokens and the first Eos; routing never reads
        // the positions after it.
        let live = t.types.iter().position(|&t| t == TokenType::Eos).map_or(l_max, |k| k + 1);
        let type_w: Vec<f64> = (0..l_max).map(|i| if i < live { 1.0 / live as f64 } else { 0.0 }).collect();
        let l_type = g.cross_entropy(f.trunk.type_logits, &type_targets, &type_w)?;
        let mut parts = alloc::vec![l_type];
        let mut out = LossParts { types: g.scalar(l_type), ..LossParts::default() };
        if let Some(l) = f.loop_logits {
            let slots = (t.loop_classes.len() / PRIMITIVE_SLOTS).max(1);
            let w = alloc::vec![1.0 / slots as f64; t.loop_classes.len()];
            let v = g.cross_entropy(l, &t.loop_classes, &w)?;
            out.loops = g.scalar(v);
            parts.push(v);
        }
        if let Some(e) = f.ext_logits {
            let n = (t.ext_classes.len() / EXTRUSION_SLOTS).max(1);
            let w = alloc::vec![1.0 / n as f64; t.ext_classes.len()];
            let v = g.cross_entropy(e, &t.ext_classes, &w)?;
            out.ext = g.scalar(v);
            parts.push(v);
        }
        if let Some(o) = f.offsets {
            let (target, w) = t.offset_targets(&self.cfg);
            let v = g.mse(o, &target, &w);
            out.refine = g.scalar(v);
            parts.push(v);
        }
        let total = g.sum(&parts);
        out.total = g.scalar(total);
        Ok((total, out))
    }

    pub fn encoder(&self) -> &PointEncoder {
        &self.encoder
    }
}
