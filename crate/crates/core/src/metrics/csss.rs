use alloc::vec::Vec;

use libm::exp;

use super::ScoringConfig;
use crate::cad::{slot, CadSequence, Extrusion, Loop, PrimitiveDelta, PrimitiveType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Line,
    Arc,
    Circle,
    Ext,
    Origin,
    Orientation,
    Size,
}

impl Component {
    pub const ALL: [Component; 7] = [
        Self::Line,
        Self::Arc,
        Self::Circle,
        Self::Ext,
        Self::Origin,
        Self::Orientation,
        Self::Size,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Line => "line",
            Self::Arc => "arc",
            Self::Circle => "circle",
            Self::Ext => "ext",
            Self::Origin => "origin",
            Self::Orientation => "orientation",
            Self::Size => "size",
        }
    }
}

/// Per-component scores; `None` when the ground truth has nothing of that kind.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentScores(pub [Option<f64>; 7]);

impl ComponentScores {
    pub fn get(&self, c: Component) -> Option<f64> {
        self.0[c as usize]
    }

    pub fn set(&mut self, c: Component, v: Option<f64>) {
        self.0[c as usize] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.map(|v| v.map(&f)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsssBreakdown {
    pub total: f64,
    pub loop_term: f64,
    pub ext_term: f64,
    pub components: ComponentScores,
    pub n_delta: usize,
    pub n_rho: usize,
    pub n_e: usize,
    pub n_rho_per_loop: Vec<usize>,
}

fn score(k: f64, sq: f64) -> f64 {
    exp(-k * sq.sqrt())
}

fn sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn primitive_type(p: &PrimitiveDelta) -> Option<PrimitiveType> {
    p.infer_type().ok()
}

/// `S` for a primitive pair, zero unless both have the same valid type.
fn primitive_score(k: f64, a: &PrimitiveDelta, b: &PrimitiveDelta) -> f64 {
    match (primitive_type(a), primitive_type(b)) {
        (Some(x), Some(y)) if x == y => score(k, sq_diff(&a.to_array(), &b.to_array())),
        _ => 0.0,
    }
}

fn categorical_gate(cfg: &ScoringConfig, a: &Extrusion, b: &Extrusion) -> f64 {
    if cfg.categorical_gate && (a.boolean_op != b.boolean_op || a.extent != b.extent) {
        0.0
    } else {
        1.0
    }
}

/// `S` over a subset of the 11 extrusion slots.
fn extrusion_score(cfg: &ScoringConfig, a: &Extrusion, b: &Extrusion, slots: &[usize]) -> f64 {
    let (va, vb) = (a.to_array(), b.to_array());
    let gated = cfg.categorical_gate;
    let sq: f64 = slots
        .iter()
        .filter(|&&s| !(gated && (s == slot::BOOLEAN || s == slot::EXTENT)))
        .map(|&s| (va[s] - vb[s]) * (va[s] - vb[s]))
        .sum();
    let has_categorical = slots.iter().any(|&s| s == slot::BOOLEAN || s == slot::EXTENT);
    let gate = if has_categorical { categorical_gate(cfg, a, b) } else { 1.0 };
    gate * score(cfg.k, sq)
}

const ALL_SLOTS: [usize; 11] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
const EXT_SLOTS: [usize; 4] = [7, 8, slot::BOOLEAN, slot::EXTENT];
const ORIGIN_SLOTS: [usize; 3] = [3, 4, 5];
const ORIENTATION_SLOTS: [usize; 3] = [0, 1, 2];
const SIZE_SLOTS: [usize; 1] = [slot::SCALE];

/// Similarity of two sequences under positional alignment of loops (in
/// sequence order), primitives and extrusions. An empty side of a term scores
/// it as fully matched.
pub fn csss(pred: &CadSequence, gt: &CadSequence, cfg: &ScoringConfig) -> CsssBreakdown {
    let pl: Vec<&Loop> = pred.loops().collect();
    let gl: Vec<&Loop> = gt.loops().collect();
    let pe: Vec<&Extrusion> = pred.extrusions().collect();
    let ge: Vec<&Extrusion> = gt.extrusions().collect();
    let n_rho = pl.len().max(gl.len());
    let n_e = pe.len().max(ge.len());

    let mut n_rho_per_loop = Vec::with_capacity(n_rho);
    let mut loop_sum = 0.0;
    let mut type_sum = [0.0f64; 3];
    let mut type_count = [0usize; 3];
    for j in 0..n_rho {
        let a = pl.get(j).map_or(&[][..], |l| &l.primitives[..]);
        let b = gl.get(j).map_or(&[][..], |l| &l.primitives[..]);
        n_rho_per_loop.push(a.len().max(b.len()));
        for (i, g) in b.iter().enumerate() {
            let s = a.get(i).map_or(0.0, |p| primitive_score(cfg.k, p, g));
            loop_sum += s;
            if let Some(t) = primitive_type(g) {
                type_sum[t as usize] += s;
                type_count[t as usize] += 1;
            }
        }
    }
    let n_delta: usize = n_rho_per_loop.iter().sum();

    let mut ext_sum = 0.0;
    let mut comp_sum = [0.0f64; 4];
    for (j, g) in ge.iter().enumerate() {
        if let Some(p) = pe.get(j) {
            ext_sum += extrusion_score(cfg, p, g, &ALL_SLOTS);
            for (c, slots) in [&EXT_SLOTS[..], &ORIGIN_SLOTS, &ORIENTATION_SLOTS, &SIZE_SLOTS].iter().enumerate() {
                comp_sum[c] += extrusion_score(cfg, p, g, slots);
            }
        }
    }

    let loop_term = if n_delta == 0 { 0.5 } else { loop_sum / (2.0 * n_delta as f64) };
    let ext_term = if n_e == 0 { 0.5 } else { ext_sum / (2.0 * n_e as f64) };
    let mut components = ComponentScores::default();
    for (t, c) in [Component::Line, Component::Arc, Component::Circle].into_iter().enumerate() {
        components.set(c, (type_count[t] > 0).then(|| type_sum[t] / type_count[t] as f64));
    }
    for (i, c) in [Component::Ext, Component::Origin, Component::Orientation, Component::Size].into_iter().enumerate() {
        components.set(c, (!ge.is_empty()).then(|| comp_sum[i] / ge.len() as f64));
    }
    CsssBreakdown {
        total: loop_term + ext_term,
        loop_term,
        ext_term,
        components,
        n_delta,
        n_rho,
        n_e,
        n_rho_per_loop,
    }
}

/// Fraction of thresholds the score reaches.
pub fn apcs_from_score(score: f64, thresholds: &[f64]) -> f64 {
    if thresholds.is_empty() {
        return 0.0;
    }
    thresholds.iter().filter(|&&t| score >= t).count() as f64 / thresholds.len() as f64
}

pub fn apcs(pred: &CadSequence, gt: &CadSequence, cfg: &ScoringConfig) -> f64 {
    apcs_from_score(csss(pred, gt, cfg).total, &cfg.thresholds)
}
