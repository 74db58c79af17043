use alloc::vec::Vec;

use super::{EncoderPlan, Model, ModelError, Targets};
use crate::cad::{
    BooleanOp, CadSequence, ExtentType, Extrusion, Loop, PrimitiveDelta, QuantizationSpec, Step, TokenType,
    EXTRUSION_SLOTS, PRIMITIVE_SLOTS,
};
use crate::geometry::PointCloud;
use crate::nn::Graph;

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Per-position argmax over `{Loop, Extrusion, Eos}` logits, cut before the
/// first `Eos`.
pub fn route(type_logits: &[f64]) -> Vec<TokenType> {
    type_logits
        .chunks(3)
        .map(|r| TokenType::from_index(argmax(r)).expect("three classes"))
        .take_while(|&t| t != TokenType::Eos)
        .collect()
}

/// Raw network prediction for one cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub types: Vec<TokenType>,
    pub loop_classes: Vec<usize>,
    /// Refiner offsets in bin units, parallel to `loop_classes` (zeros without a refiner).
    pub offsets: Vec<f64>,
    pub ext_classes: Vec<usize>,
}

/// Builds a sequence from decoded tokens. Slots whose start class is the
/// sentinel are padding; loops are closed by snapping each end to the next
/// start. Trailing loops without an extrusion form an extrusion-less step.
pub fn decode_sequence(d: &Decoded, n_p_max: usize, bins: u16) -> CadSequence {
    let q = QuantizationSpec::new(bins).expect("model bins are validated");
    let sentinel = q.sentinel() as usize;
    let top = f64::from(bins - 1);
    let value = |k: usize| (q.dequantize(d.loop_classes[k] as u16) + d.offsets[k] / top).clamp(0.0, 1.0);
    let per_loop = n_p_max * PRIMITIVE_SLOTS;
    let (mut li, mut ei) = (0, 0);
    let mut steps = Vec::new();
    let mut pending: Vec<Loop> = Vec::new();
    for &t in &d.types {
        match t {
            TokenType::Loop => {
                let base = li * per_loop;
                li += 1;
                let mut prims = Vec::new();
                for s in 0..n_p_max {
                    let k = base + s * PRIMITIVE_SLOTS;
                    let c = &d.loop_classes[k..k + PRIMITIVE_SLOTS];
                    if c[0] == sentinel || c[1] == sentinel {
                        continue;
                    }
                    let mid = (c[2] != sentinel && c[3] != sentinel).then(|| [value(k + 2), value(k + 3)]);
                    prims.push(PrimitiveDelta { start: [value(k), value(k + 1)], mid, end: [value(k + 4), value(k + 5)] });
                }
                let n = prims.len();
                for i in 0..n {
                    prims[i].end = prims[(i + 1) % n].start;
                }
                if n > 0 {
                    pending.push(Loop::new(prims));
                }
            }
            TokenType::Extrusion => {
                let c = &d.ext_classes[ei * EXTRUSION_SLOTS..(ei + 1) * EXTRUSION_SLOTS];
                ei += 1;
                let v = |i: usize| q.dequantize(c[i].min(q.bins() as usize - 1) as u16);
                steps.push(Step {
                    loops: core::mem::take(&mut pending),
                    extrusion: Some(Extrusion {
                        orientation: [v(0), v(1), v(2)],
                        origin: [v(3), v(4), v(5)],
                        scale: v(6),
                        distances: [v(7), v(8)],
                        boolean_op: BooleanOp::from_index(c[9]).unwrap_or(BooleanOp::New),
                        extent: ExtentType::from_index(c[10]).unwrap_or(ExtentType::OneSided),
                    }),
                });
            }
            TokenType::Eos => break,
        }
    }
    if !pending.is_empty() {
        steps.push(Step { loops: pending, extrusion: None });
    }
    CadSequence { steps, quantization: q }
}

fn argmax_rows(values: &[f64], classes: usize, limit: impl Fn(usize) -> usize) -> Vec<usize> {
    values.chunks(classes).enumerate().map(|(i, r)| argmax(&r[..limit(i)])).collect()
}

impl Model {
    fn run(&self, plan: &EncoderPlan, types: Option<&[TokenType]>) -> Decoded {
        let mut g = Graph::new(&self.store);
        let trunk = self.trunk(&mut g, plan, None);
        let types = match types {
            Some(t) => t.iter().copied().take_while(|&t| t != TokenType::Eos).collect(),
            None => route(g.value(trunk.type_logits)),
        };
        let f = self.heads(&mut g, trunk, &types, None);
        let c = self.cfg.classes();
        let bins = self.cfg.bins as usize;
        let loop_classes = f.loop_logits.map_or_else(Vec::new, |l| argmax_rows(g.value(l), c, |_| c));
        let offsets = match f.offsets {
            Some(o) => g.value(o).to_vec(),
            None => alloc::vec![0.0; loop_classes.len()],
        };
        let ext_classes = f.ext_logits.map_or_else(Vec::new, |e| {
            argmax_rows(g.value(e), c, |i| match i % EXTRUSION_SLOTS {
                9 => BooleanOp::ALL.len(),
                10 => ExtentType::ALL.len(),
                _ => bins,
            })
        });
        Decoded { types, loop_classes, offsets, ext_classes }
    }

    /// Prediction routed by the type head.
    pub fn predict(&self, plan: &EncoderPlan) -> Decoded {
        self.run(plan, None)
    }

    /// Prediction routed by given token types (teacher forcing).
    pub fn predict_routed(&self, plan: &EncoderPlan, types: &[TokenType]) -> Decoded {
        self.run(plan, Some(types))
    }

    pub fn infer_plan(&self, plan: &EncoderPlan) -> CadSequence {
        decode_sequence(&self.predict(plan), self.cfg.n_p_max, self.cfg.bins)
    }

    /// Full pipeline from an oriented cloud. The result may be invalid.
    pub fn infer(&self, cloud: &PointCloud) -> Result<CadSequence, ModelError> {
        Ok(self.infer_plan(&EncoderPlan::new(cloud, &self.cfg)?))
    }
}

/// Mean `|ρ̂ − ρ|` over ground-truth loop coordinates that are not
/// sentinels, with teacher-forced routing so slots line up.
pub fn coordinate_error(model: &Model, samples: &[(EncoderPlan, Targets)]) -> f64 {
    let q = QuantizationSpec::new(model.cfg.bins).expect("model bins are validated");
    let top = f64::from(model.cfg.bins - 1);
    let (mut sum, mut n) = (0.0, 0usize);
    for (plan, t) in samples {
        let d = model.predict_routed(plan, &t.types);
        for (k, v) in t.loop_values.iter().enumerate() {
            if let Some(x) = v {
                let pred = q.dequantize(d.loop_classes[k] as u16) + d.offsets[k] / top;
                sum += (pred - x).abs();
                n += 1;
            }
        }
    }
    if n == 0 { 0.0 } else { sum / n as f64 }
}
