use alloc::vec::Vec;

use super::ScoringConfig;
use crate::cad::{CadSequence, PrimitiveType, QuantizedExtrusion, QuantizedPrimitive};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Line,
    Arc,
    Circle,
    Extrude,
    /// A primitive whose type cannot be inferred; never matches anything.
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegacyCommand {
    pub kind: CommandKind,
    /// Quantized parameters: lines carry start/end, arcs and circles all six
    /// coordinates, extrusions the 11 slots.
    pub params: Vec<u16>,
}

impl LegacyCommand {
    fn matches(&self, other: &LegacyCommand) -> bool {
        self.kind == other.kind && self.kind != CommandKind::Malformed
    }
}

/// Flattens a sequence into the per-primitive/per-extrusion command list.
pub fn legacy_commands(seq: &CadSequence) -> Vec<LegacyCommand> {
    let q = &seq.quantization;
    let mut out = Vec::new();
    for step in &seq.steps {
        for l in &step.loops {
            for p in &l.primitives {
                let c = QuantizedPrimitive::from_delta(p, q).coords;
                let (kind, params) = match p.infer_type() {
                    Ok(PrimitiveType::Line) => (CommandKind::Line, alloc::vec![c[0], c[1], c[4], c[5]]),
                    Ok(PrimitiveType::Arc) => (CommandKind::Arc, c.to_vec()),
                    Ok(PrimitiveType::Circle) => (CommandKind::Circle, c.to_vec()),
                    Err(_) => (CommandKind::Malformed, c.to_vec()),
                };
                out.push(LegacyCommand { kind, params });
            }
        }
        if let Some(e) = &step.extrusion {
            out.push(LegacyCommand {
                kind: CommandKind::Extrude,
                params: QuantizedExtrusion::from_extrusion(e, q).params.to_vec(),
            });
        }
    }
    out
}

/// Fraction of the ground-truth commands whose type is predicted at the same
/// position; predictions past the ground-truth length are ignored.
pub fn acc_cmd(pred: &CadSequence, gt: &CadSequence) -> f64 {
    let p = legacy_commands(pred);
    let g = legacy_commands(gt);
    if g.is_empty() {
        return if p.is_empty() { 1.0 } else { 0.0 };
    }
    let hits = g.iter().zip(&p).filter(|(a, b)| a.matches(b)).count();
    hits as f64 / g.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamAccuracy {
    pub value: f64,
    /// Parameters of correctly typed commands; 0 means `value` is the 1.0 convention.
    pub compared: usize,
}

/// Fraction of parameters within `eta` bins over correctly typed commands.
pub fn acc_param(pred: &CadSequence, gt: &CadSequence, cfg: &ScoringConfig) -> ParamAccuracy {
    let p = legacy_commands(pred);
    let g = legacy_commands(gt);
    let mut compared = 0;
    let mut within = 0;
    for (a, b) in g.iter().zip(&p) {
        if !a.matches(b) {
            continue;
        }
        for (x, y) in a.params.iter().zip(&b.params) {
            compared += 1;
            if x.abs_diff(*y) < cfg.eta {
                within += 1;
            }
        }
    }
    let value = if compared == 0 { 1.0 } else { within as f64 / compared as f64 };
    ParamAccuracy { value, compared }
}
